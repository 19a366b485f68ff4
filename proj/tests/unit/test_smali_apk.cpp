#include <doctest.h>

#include <algorithm>
#include <map>

#include "dexdedup/axml.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/extract.hpp"
#include "dexdedup/zip_archive.hpp"
#include "oracles.hpp"

using namespace dexdedup;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_SUITE("smali") {
  TEST_CASE("smali twin agrees with the DEX fixture") {
    const auto from_dex = extract_from_dex(read_file_bytes(oracle::fixture("minimal.dex")), "m");
    const auto from_smali = extract_from_smali_tree(oracle::fixture("minimal_smali"), "m");
    auto key = [](const std::vector<OpcodeSequence>& s) {
      std::map<std::string, std::vector<std::uint8_t>> m;
      for (const auto& x : s) m[x.method_id] = x.opcodes;
      return m;
    };
    CHECK(key(from_smali.sequences) == key(from_dex.sequences));
    CHECK(from_smali.report.parse_warnings.empty());
  }

  TEST_CASE("directives, labels and data blocks are ignored") {
    const char* text = R"(.class LA;
.super Ljava/lang/Object;
# a comment
.method static f()V
    .registers 2
    .param p0
    .end param
    :label
    nop
    .line 3
    return-void
.end method
.method abstract g()V
.end method
)";
    const auto seqs = extract_from_smali(text, "A.smali");
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].method_id == "LA;->f()V");
    CHECK(seqs[0].opcodes == std::vector<std::uint8_t>{0x00, 0x0e});
  }

  TEST_CASE("unknown mnemonic names file and line") {
    const char* text = ".class LA;\n.method f()V\n    frobnicate v0\n.end method\n";
    try {
      extract_from_smali(text, "A.smali");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownMnemonic);
      CHECK(std::string(e.what()).find("A.smali:3") != std::string::npos);
    }
  }

  TEST_CASE("unbalanced methods are MalformedSmali") {
    CHECK(code_of([] { extract_from_smali(".class LA;\n.method f()V\nnop\n"); }) == ErrorCode::kMalformedSmali);
    CHECK(code_of([] { extract_from_smali(".class LA;\n.method f()V\n.method g()V\n"); }) ==
          ErrorCode::kMalformedSmali);
    CHECK(code_of([] { extract_from_smali(".class LA;\n.end method\n"); }) == ErrorCode::kMalformedSmali);
  }
}

TEST_SUITE("apk") {
  TEST_CASE("root classes*.dex members in lexicographic order; bad members become warnings") {
    const auto bytes = read_file_bytes(oracle::fixture("two_dex.apk"));
    const auto ex = extract_from_apk(bytes, "two");
    // classes.dex (5 methods) then classes2.dex (1); assets/classes.dex ignored.
    REQUIRE(ex.sequences.size() == 6);
    CHECK(ex.sequences[0].method_id == "LFixture;->alpha()V");
    CHECK(ex.sequences[5].method_id == "LSecond;->run()V");
    CHECK(ex.sequences[5].opcodes == std::vector<std::uint8_t>{0x12, 0x0e});
    REQUIRE(ex.report.parse_warnings.size() == 1);
    CHECK(ex.report.parse_warnings[0].find("classes3.dex") != std::string::npos);
  }

  TEST_CASE("zip without dex members") {
    const auto zip = write_zip({{"AndroidManifest.xml", {'x'}}}, false);
    CHECK(code_of([&] { extract_from_apk(zip); }) == ErrorCode::kNoDexEntries);
    CHECK(code_of([] { extract_from_apk(std::vector<std::uint8_t>{'P', 'K', 3, 4, 0}); }) ==
          ErrorCode::kMalformedZip);
  }

  TEST_CASE("zip writer round-trips stored and deflated members") {
    std::vector<std::uint8_t> big(5000);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<std::uint8_t>(i % 7);
    for (const bool deflate : {false, true}) {
      const auto zip = write_zip({{"a.txt", {'h', 'i'}}, {"b.bin", big}}, deflate);
      const ZipArchive archive(zip);
      REQUIRE(archive.entries().size() == 2);
      CHECK(archive.read(*archive.find("b.bin")) == big);
      CHECK(archive.read(*archive.find("a.txt")) == std::vector<std::uint8_t>{'h', 'i'});
      CHECK_FALSE(archive.find("c").has_value());
    }
  }

  TEST_CASE("corrupted member fails its CRC") {
    auto zip = write_zip({{"a.txt", {'h', 'e', 'l', 'l', 'o'}}}, false);
    const auto pos = std::search(zip.begin(), zip.end(), std::begin("hello"), std::end("hello") - 1);
    REQUIRE(pos != zip.end());
    *pos = 'j';
    const ZipArchive archive(zip);
    CHECK(code_of([&] { archive.read(archive.entries()[0]); }) == ErrorCode::kMalformedZip);
  }

  TEST_CASE("binary manifest round trip") {
    const auto axml = write_binary_manifest("com.x", {"android.permission.SEND_SMS", "android.permission.INTERNET"});
    const auto strings = binary_xml_strings(axml);
    CHECK(std::count(strings.begin(), strings.end(), "android.permission.SEND_SMS") == 1);
    CHECK(std::count(strings.begin(), strings.end(), "com.x") == 1);
    CHECK(code_of([] { binary_xml_strings(std::vector<std::uint8_t>{3, 0, 8, 0, 1}); }) ==
          ErrorCode::kMalformedManifest);
  }

  TEST_CASE("missing manifest") {
    const auto zip = write_zip({{"classes.dex", {'d'}}}, false);
    CHECK(code_of([&] { apk_manifest_strings(zip); }) == ErrorCode::kNoManifest);
  }
}
