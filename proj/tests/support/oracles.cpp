#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#ifndef DEXDEDUP_FIXTURE_DIR
#error "DEXDEDUP_FIXTURE_DIR must be defined"
#endif

namespace oracle {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(DEXDEDUP_FIXTURE_DIR) / name; }

const std::array<std::string, 256>& dalvik_names() {
  static const std::array<std::string, 256> names = [] {
    std::array<std::string, 256> n;
    for (int v = 0; v < 256; ++v) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "unused_%02X", v);
      n[v] = buf;
    }
    const char* head[] = {
        "nop", "move", "move/from16", "move/16", "move-wide", "move-wide/from16", "move-wide/16", "move-object",
        "move-object/from16", "move-object/16", "move-result", "move-result-wide", "move-result-object",
        "move-exception", "return-void", "return", "return-wide", "return-object", "const/4", "const/16", "const",
        "const/high16", "const-wide/16", "const-wide/32", "const-wide", "const-wide/high16", "const-string",
        "const-string/jumbo", "const-class", "monitor-enter", "monitor-exit", "check-cast", "instance-of",
        "array-length", "new-instance", "new-array", "filled-new-array", "filled-new-array/range",
        "fill-array-data", "throw", "goto", "goto/16", "goto/32", "packed-switch", "sparse-switch", "cmpl-float",
        "cmpg-float", "cmpl-double", "cmpg-double", "cmp-long"};
    int v = 0;
    for (const char* h : head) n[v++] = h;
    for (const char* c : {"eq", "ne", "lt", "ge", "gt", "le"}) n[v++] = std::string("if-") + c;
    for (const char* c : {"eq", "ne", "lt", "ge", "gt", "le"}) n[v++] = std::string("if-") + c + "z";
    v = 0x44;
    const char* kinds[] = {"", "-wide", "-object", "-boolean", "-byte", "-char", "-short"};
    for (const char* op : {"aget", "aput", "iget", "iput", "sget", "sput"}) {
      for (const char* k : kinds) n[v++] = std::string(op) + k;
    }
    const char* invokes[] = {"virtual", "super", "direct", "static", "interface"};
    v = 0x6e;
    for (const char* k : invokes) n[v++] = std::string("invoke-") + k;
    v = 0x74;
    for (const char* k : invokes) n[v++] = std::string("invoke-") + k + "/range";
    v = 0x7b;
    for (const char* u : {"neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double", "int-to-long",
                          "int-to-float", "int-to-double", "long-to-int", "long-to-float", "long-to-double",
                          "float-to-int", "float-to-long", "float-to-double", "double-to-int", "double-to-long",
                          "double-to-float", "int-to-byte", "int-to-char", "int-to-short"}) {
      n[v++] = u;
    }
    std::vector<std::string> binops;
    for (const char* t : {"int", "long"}) {
      for (const char* op : {"add", "sub", "mul", "div", "rem", "and", "or", "xor", "shl", "shr", "ushr"}) {
        binops.push_back(std::string(op) + "-" + t);
      }
    }
    for (const char* t : {"float", "double"}) {
      for (const char* op : {"add", "sub", "mul", "div", "rem"}) binops.push_back(std::string(op) + "-" + t);
    }
    v = 0x90;
    for (const auto& b : binops) n[v++] = b;
    for (const auto& b : binops) n[v++] = b + "/2addr";
    v = 0xd0;
    for (const char* op : {"add-int", "rsub-int", "mul-int", "div-int", "rem-int", "and-int", "or-int", "xor-int"}) {
      n[v++] = std::string(op) + (std::string(op) == "rsub-int" ? "" : "/lit16");
    }
    for (const char* op : {"add-int", "rsub-int", "mul-int", "div-int", "rem-int", "and-int", "or-int", "xor-int",
                           "shl-int", "shr-int", "ushr-int"}) {
      n[v++] = std::string(op) + "/lit8";
    }
    n[0xee] = "execute-inline";
    n[0xf0] = "invoke-direct-empty";
    v = 0xf2;
    for (const char* q : {"iget-quick", "iget-wide-quick", "iget-object-quick", "iput-quick", "iput-wide-quick",
                          "iput-object-quick", "invoke-virtual-quick", "invoke-virtual-quick/range",
                          "invoke-super-quick", "invoke-super-quick/range"}) {
      n[v++] = q;
    }
    return n;
  }();
  return names;
}

std::vector<std::pair<int, std::string>> printed_opcode_table() {
  std::ifstream in(fixture("opcode_table_printed.tsv"));
  std::vector<std::pair<int, std::string>> cells;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    cells.emplace_back(std::stoi(line.substr(0, tab), nullptr, 16), line.substr(tab + 1));
  }
  return cells;
}

double ochiai(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b) {
  std::size_t shared = 0;
  for (const auto h : a) shared += b.count(h);
  const double d = 1.0 - static_cast<double>(shared) /
                             std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
  return std::clamp(d, 0.0, 1.0);
}

double ochiai(const dexdedup::AppFingerprint& a, const dexdedup::AppFingerprint& b) {
  return ochiai(std::set<std::uint64_t>(a.hashes.begin(), a.hashes.end()),
                std::set<std::uint64_t>(b.hashes.begin(), b.hashes.end()));
}

std::vector<std::size_t> neighbors(const std::vector<dexdedup::AppFingerprint>& corpus, std::size_t i, double eps,
                                   const std::vector<char>& excluded) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    if (j == i || (!excluded.empty() && excluded[j])) continue;
    if (ochiai(corpus[i], corpus[j]) <= eps) out.push_back(j);
  }
  return out;
}

std::size_t distinct_sets(const std::vector<dexdedup::AppFingerprint>& corpus) {
  std::set<std::set<std::uint64_t>> seen;
  for (const auto& fp : corpus) seen.insert(std::set<std::uint64_t>(fp.hashes.begin(), fp.hashes.end()));
  return seen.size();
}

double info_gain(const dexdedup::FeatureMatrix& m, std::size_t column) {
  auto entropy = [](const std::map<std::string, double>& counts) {
    double total = 0;
    for (const auto& [_, c] : counts) total += c;
    double h = 0;
    for (const auto& [_, c] : counts) {
      if (c > 0) h -= c / total * std::log(c / total) / std::log(2.0);
    }
    return h;
  };
  std::map<std::string, double> all;
  std::map<int, std::map<std::string, double>> by_value;
  for (const auto& r : m.rows) {
    const std::string label(dexdedup::label_name(r.label));
    all[label] += 1;
    by_value[r.bits[column]][label] += 1;
  }
  double conditional = 0;
  for (const auto& [_, counts] : by_value) {
    double n = 0;
    for (const auto& [__, c] : counts) n += c;
    conditional += n / static_cast<double>(m.rows.size()) * entropy(counts);
  }
  return entropy(all) - conditional;
}

std::vector<dexdedup::AppFingerprint> random_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t bound) { return static_cast<std::uint64_t>(rng() % bound); };
  std::vector<std::vector<std::uint64_t>> bases;
  for (int f = 0; f < 12; ++f) {
    std::vector<std::uint64_t> base;
    const std::size_t size = 5 + pick(40);
    for (std::size_t k = 0; k < size; ++k) base.push_back(pick(400));  // small universe: chance overlaps
    bases.push_back(std::move(base));
  }
  std::vector<dexdedup::AppFingerprint> corpus;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> hashes;
    if (i > 0 && pick(5) == 0) {
      hashes = corpus[pick(i)].hashes;  // exact copy
    } else {
      const auto& base = bases[pick(bases.size())];
      const double keep = 0.5 + 0.5 * static_cast<double>(pick(1000)) / 1000.0;
      for (const auto h : base) {
        if (static_cast<double>(pick(1000)) / 1000.0 < keep) hashes.push_back(h);
      }
      const std::size_t extra = pick(6);
      for (std::size_t k = 0; k < extra; ++k) hashes.push_back(1000 + pick(100000));
      if (hashes.empty()) hashes.push_back(base.front());
    }
    const auto label = pick(2) ? dexdedup::Label::kMalware : dexdedup::Label::kGoodware;
    corpus.push_back(dexdedup::make_fingerprint("app" + std::to_string(i), label, hashes));
  }
  return corpus;
}

dexdedup::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  dexdedup::FeatureMatrix m;
  for (std::size_t c = 0; c < cols; ++c) m.columns.push_back("f" + std::to_string(c));
  // Per-column bias so gains vary from zero to large.
  std::vector<double> p_mal(cols), p_good(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    p_mal[c] = static_cast<double>(rng() % 1001) / 1000.0;
    p_good[c] = static_cast<double>(rng() % 1001) / 1000.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    dexdedup::FeatureVector v;
    v.app_id = "r" + std::to_string(r);
    v.label = (r == 0 || (r != 1 && rng() % 2)) ? dexdedup::Label::kMalware : dexdedup::Label::kGoodware;
    const auto& p = v.label == dexdedup::Label::kMalware ? p_mal : p_good;
    for (std::size_t c = 0; c < cols; ++c) {
      v.bits.push_back(static_cast<double>(rng() % 1000000) / 1000000.0 < p[c] ? 1 : 0);
    }
    m.rows.push_back(std::move(v));
  }
  return m;
}

}  // namespace oracle
