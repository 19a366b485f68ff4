#include <doctest.h>

#include <map>

#include "dexdedup/dex_file.hpp"
#include "dexdedup/dex_writer.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/extract.hpp"
#include "oracles.hpp"

using namespace dexdedup;

namespace {

// Frozen from an independent androguard disassembly of fixtures/minimal.dex.
const std::map<std::string, std::vector<std::uint8_t>> kMinimalDex = {
    {"LFixture;->alpha()V", {0x12, 0x18, 0x71, 0x0B, 0x0E}},
    {"LFixture;->beta()V", {0x2B, 0x0E}},
    {"LFixture;->delta()V", {0x0E}},
    {"LFixture;->gamma()V", {0x12, 0x26, 0x2C, 0x0E}},
    {"LOther;->zeta()V", {0x1B, 0x74, 0x0C, 0x1F, 0x0E}},
};

std::map<std::string, std::vector<std::uint8_t>> as_map(const std::vector<OpcodeSequence>& seqs) {
  std::map<std::string, std::vector<std::uint8_t>> m;
  for (const auto& s : seqs) m[s.method_id] = s.opcodes;
  return m;
}

std::vector<std::uint8_t> u16s(std::initializer_list<std::uint16_t> units) {
  std::vector<std::uint8_t> out;
  for (const auto u : units) {
    out.push_back(static_cast<std::uint8_t>(u));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  return out;
}

}  // namespace

TEST_SUITE("dex") {
  TEST_CASE("hand-assembled fixture matches the independent disassembly") {
    const auto bytes = read_file_bytes(oracle::fixture("minimal.dex"));
    const auto ex = extract_from_dex(bytes, "minimal");
    CHECK(as_map(ex.sequences) == kMinimalDex);
    CHECK(ex.report.method_count == 5);
    CHECK(ex.report.skipped_methods == 0);
    CHECK(ex.report.parse_warnings.empty());
    // class_data order: direct methods by method index.
    REQUIRE(ex.sequences.size() == 5);
    CHECK(ex.sequences[0].method_id == "LFixture;->alpha()V");
    CHECK(ex.sequences[4].method_id == "LOther;->zeta()V");
  }

  TEST_CASE("header accessors") {
    const auto bytes = read_file_bytes(oracle::fixture("minimal.dex"));
    const DexFile dex(bytes);
    CHECK(dex.version() == 35);
    CHECK(dex.class_def_count() == 2);
    CHECK(dex.method_count() == 6);
    CHECK(dex.method_name(0) == "alpha");
    CHECK(dex.method_reference(5) == "LOther;->zeta()V");
  }

  TEST_CASE("min-length filter") {
    const auto bytes = read_file_bytes(oracle::fixture("minimal.dex"));
    const auto ex = extract_from_dex(bytes, "minimal", {3});
    CHECK(ex.sequences.size() == 3);
    CHECK(ex.report.filtered_methods == 2);
  }

  TEST_CASE("payloads are skipped and never recorded") {
    // const/4; packed-switch; return-void; payload with 1 target.
    const auto insns = u16s({0x0012, 0x002B, 0x0003, 0x0000, 0x000E, 0x0000, 0x0100, 0x0001, 0, 0, 1, 0});
    // unit 5 is a nop spacer before the aligned payload.
    CHECK(walk_instructions(insns, 35) == std::vector<std::uint8_t>{0x12, 0x2B, 0x0E, 0x00});
  }

  TEST_CASE("overruns throw MethodParseError") {
    const auto truncated = u16s({0x0018, 0x0000});  // const-wide needs 5 units
    CHECK_THROWS_AS(walk_instructions(truncated, 35), Error);
    try {
      walk_instructions(truncated, 35);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMethodParseError);
    }
    const auto bad_payload = u16s({0x000E, 0x0300, 0x0004, 0x00FF, 0x0000});  // claims 255 x 4 bytes
    CHECK_THROWS_AS(walk_instructions(bad_payload, 35), Error);
  }

  TEST_CASE("unused opcodes are counted") {
    std::size_t unused = 0;
    walk_instructions(u16s({0x003E, 0x000E}), 35, &unused);
    CHECK(unused == 1);
  }

  TEST_CASE("header damage is MalformedDex") {
    auto bytes = read_file_bytes(oracle::fixture("minimal.dex"));
    auto expect_code = [](std::vector<std::uint8_t> b, ErrorCode code) {
      try {
        extract_from_dex(b);
        FAIL("no throw");
      } catch (const Error& e) {
        CHECK(e.code() == code);
      }
    };
    auto bad_magic = bytes;
    bad_magic[0] = 'x';
    expect_code(bad_magic, ErrorCode::kMalformedDex);
    expect_code({bytes.begin(), bytes.begin() + 0x40}, ErrorCode::kMalformedDex);
    auto bad_table = bytes;
    bad_table[0x58] = 0xFF;  // method_ids_size
    bad_table[0x59] = 0xFF;
    expect_code(bad_table, ErrorCode::kMalformedDex);
  }

  TEST_CASE("a damaged code item costs one method, not the app") {
    auto bytes = read_file_bytes(oracle::fixture("minimal.dex"));
    const DexFile dex(bytes);
    const auto methods = dex.class_methods(0);
    // Point alpha's insns_size far past the end of the file.
    const std::uint32_t off = methods[0].code_off + 12;
    bytes[off] = 0xFF;
    bytes[off + 1] = 0xFF;
    const auto ex = extract_from_dex(bytes, "broken");
    CHECK(ex.sequences.size() == 4);
    CHECK(ex.report.skipped_methods == 1);
    CHECK(ex.report.parse_warnings.size() == 1);
  }

  TEST_CASE("no input byte offset crashes the parser") {
    const auto original = read_file_bytes(oracle::fixture("minimal.dex"));
    for (std::size_t i = 0; i < original.size(); ++i) {
      for (const std::uint8_t v : {std::uint8_t{0x00}, std::uint8_t{0xFF}, std::uint8_t{0x80}}) {
        auto b = original;
        b[i] = v;
        try {
          extract_from_dex(b);
        } catch (const Error&) {
        }
      }
    }
    for (std::size_t n = 0; n < original.size(); n += 7) {
      std::vector<std::uint8_t> b(original.begin(), original.begin() + static_cast<std::ptrdiff_t>(n));
      try {
        extract_from_dex(b);
      } catch (const Error&) {
      }
    }
  }

  TEST_CASE("writer output round-trips through the parser") {
    const std::vector<DexClassSpec> classes{
        {"Lcom/a/B;", {{"run", {0x12, 0x18, 0x2b, 0x0e}}, {"go", {0x0e}}}},
        {"Lcom/a/A;", {{"x", {0x6e, 0x0c, 0x11}}}}};
    const std::vector<DexMethodRef> refs{{"Landroid/telephony/SmsManager;", "sendTextMessage"}};
    const auto bytes = write_dex(classes, refs);
    const auto ex = extract_from_dex(bytes, "w");
    const auto m = as_map(ex.sequences);
    CHECK(m.at("Lcom/a/B;->run()V") == std::vector<std::uint8_t>{0x12, 0x18, 0x2b, 0x0e});
    CHECK(m.at("Lcom/a/B;->go()V") == std::vector<std::uint8_t>{0x0e});
    CHECK(m.at("Lcom/a/A;->x()V") == std::vector<std::uint8_t>{0x6e, 0x0c, 0x11});
    const DexFile dex(bytes);
    bool found = false;
    for (std::uint32_t i = 0; i < dex.method_count(); ++i) found |= dex.method_name(i) == "sendTextMessage";
    CHECK(found);
  }
}
