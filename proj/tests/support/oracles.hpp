#pragma once

// Reference implementations used only by tests. They favour the obvious
// algorithm over the fast one so they can be trusted as oracles.

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "dexdedup/features.hpp"
#include "dexdedup/fingerprint.hpp"

namespace oracle {

std::filesystem::path fixture(const std::string& name);

// Official Dalvik mnemonics (odex era), built from the instruction-set
// layout rather than copied from the library table.
const std::array<std::string, 256>& dalvik_names();

// Printed opcode table cells: (value, mnemonic as printed), in table order.
std::vector<std::pair<int, std::string>> printed_opcode_table();

double ochiai(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b);
double ochiai(const dexdedup::AppFingerprint& a, const dexdedup::AppFingerprint& b);

// All-pairs scan: indices j != i, not excluded, with ochiai(i, j) <= eps.
std::vector<std::size_t> neighbors(const std::vector<dexdedup::AppFingerprint>& corpus, std::size_t i, double eps,
                                   const std::vector<char>& excluded = {});

// Number of distinct hash sets (group-by set equality).
std::size_t distinct_sets(const std::vector<dexdedup::AppFingerprint>& corpus);

// IG of one column by direct counting with natural logs converted to bits.
double info_gain(const dexdedup::FeatureMatrix& m, std::size_t column);

// Corpus of `n` apps in families: members share most hashes with a family
// base, some apps are exact copies of an earlier app.
std::vector<dexdedup::AppFingerprint> random_corpus(std::size_t n, std::uint64_t seed);

// Random binary matrix with both labels present.
dexdedup::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace oracle
