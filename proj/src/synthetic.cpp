#include "dexdedup/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "dexdedup/axml.hpp"
#include "dexdedup/dex_writer.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/jsonl.hpp"
#include "dexdedup/rng.hpp"
#include "dexdedup/zip_archive.hpp"

namespace dexdedup {
namespace {

// Common non-payload instructions.
constexpr std::array<std::uint8_t, 20> kOpcodePool = {
    0x01, 0x0a, 0x0c, 0x12, 0x1a, 0x1f, 0x21, 0x22, 0x28, 0x38,
    0x39, 0x54, 0x5b, 0x62, 0x6e, 0x70, 0x71, 0x90, 0xd8, 0x35,
};
constexpr std::uint8_t kReturnVoid = 0x0e;

std::vector<std::uint8_t> random_body(Rng& rng) {
  const std::size_t len = 3 + static_cast<std::size_t>(rng.below(10));
  std::vector<std::uint8_t> ops;
  for (std::size_t i = 0; i + 1 < len; ++i) ops.push_back(kOpcodePool[rng.below(kOpcodePool.size())]);
  ops.push_back(kReturnVoid);
  return ops;
}

std::string method_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "m%03zu", i);
  return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config) {
  if (config.distinct_apps == 0 || config.duplication == 0 || config.methods_per_app == 0 || config.family_size == 0) {
    throw Error(ErrorCode::kInvalidConfig, "synthetic corpus needs apps, duplication, methods and family size >= 1");
  }
  const auto n_mal = static_cast<std::size_t>(
      std::llround(config.malware_fraction * static_cast<double>(config.distinct_apps)));
  if (n_mal == 0 || n_mal >= config.distinct_apps) {
    throw Error(ErrorCode::kInvalidConfig, "malware fraction leaves a class empty");
  }
  Rng rng(config.seed);

  std::vector<Label> labels(config.distinct_apps, Label::kGoodware);
  std::fill_n(labels.begin(), n_mal, Label::kMalware);
  rng.shuffle(labels);

  const auto perm_cols = feature_names(FeatureSet::kPermissions);
  const auto api_cols = feature_names(FeatureSet::kApiCalls);
  const std::size_t width = perm_cols.size() + api_cols.size();
  std::vector<double> p_mal(width), p_good(width);
  std::vector<std::size_t> informative(width);
  for (std::size_t f = 0; f < width; ++f) informative[f] = f;
  rng.shuffle(informative);
  informative.resize(std::min(config.informative_features, width));
  for (std::size_t f = 0; f < width; ++f) {
    const double base = 0.2 + 0.6 * rng.uniform();
    p_mal[f] = p_good[f] = base;
  }
  for (const std::size_t f : informative) {
    const double shift = (rng.bernoulli(0.5) ? 0.5 : -0.5) * config.signal;
    p_mal[f] = std::clamp(p_mal[f] + shift, 0.02, 0.98);
    p_good[f] = std::clamp(p_good[f] - shift, 0.02, 0.98);
  }

  // Distinct apps: code first (families share a base), then features.
  struct Distinct {
    std::vector<std::vector<std::uint8_t>> bodies;
    std::vector<std::uint8_t> bits;
  };
  std::vector<Distinct> distinct(config.distinct_apps);
  std::set<std::vector<std::vector<std::uint8_t>>> seen_code;
  std::set<std::vector<std::uint8_t>> seen_bits;
  std::vector<std::vector<std::uint8_t>> family_base;
  for (std::size_t a = 0; a < config.distinct_apps; ++a) {
    if (a % config.family_size == 0) {
      family_base.clear();
      for (std::size_t m = 0; m < config.methods_per_app; ++m) family_base.push_back(random_body(rng));
    }
    auto& d = distinct[a];
    do {
      d.bodies.clear();
      for (std::size_t m = 0; m < config.methods_per_app; ++m) {
        const bool own = config.family_size == 1 || rng.bernoulli(config.family_divergence);
        d.bodies.push_back(own ? random_body(rng) : family_base[m]);
      }
      auto key = d.bodies;
      std::sort(key.begin(), key.end());
      key.erase(std::unique(key.begin(), key.end()), key.end());
      if (seen_code.insert(std::move(key)).second) break;
    } while (true);
    do {
      d.bits.assign(width, 0);
      const auto& p = labels[a] == Label::kMalware ? p_mal : p_good;
      for (std::size_t f = 0; f < width; ++f) d.bits[f] = rng.bernoulli(p[f]) ? 1 : 0;
    } while (!seen_bits.insert(d.bits).second);
  }

  SyntheticCorpus corpus;
  for (std::size_t a = 0; a < config.distinct_apps; ++a) {
    for (std::size_t c = 0; c < config.duplication; ++c) {
      SyntheticApp app;
      char name[48];
      std::snprintf(name, sizeof name, "syn%04zu_c%zu", a, c);
      app.label = labels[a];
      app.app_id = std::string(label_name(app.label)) + "/" + name;
      app.original = a;
      for (std::size_t m = 0; m < distinct[a].bodies.size(); ++m) {
        app.methods.push_back({"Lcom/synth/Main;->" + method_name(m) + "()V", distinct[a].bodies[m]});
      }
      for (std::size_t f = 0; f < perm_cols.size(); ++f) {
        if (distinct[a].bits[f]) app.permissions.push_back("android.permission." + perm_cols[f]);
      }
      for (std::size_t f = 0; f < api_cols.size(); ++f) {
        if (distinct[a].bits[perm_cols.size() + f]) app.api_calls.push_back(api_cols[f]);
      }
      corpus.apps.push_back(std::move(app));
    }
  }
  return corpus;
}

std::vector<AppFingerprint> SyntheticCorpus::fingerprints() const {
  std::vector<AppFingerprint> out;
  out.reserve(apps.size());
  for (const auto& a : apps) out.push_back(fingerprint_of(a.methods, a.app_id, a.label));
  return out;
}

FeatureMatrix SyntheticCorpus::features(FeatureSet set) const {
  std::vector<FeatureVector> rows;
  rows.reserve(apps.size());
  for (const auto& a : apps) {
    FeatureVector v{a.app_id, a.label, {}};
    if (set != FeatureSet::kApiCalls) v.bits = permission_bits(a.permissions);
    if (set != FeatureSet::kPermissions) {
      const auto api = api_call_bits(a.api_calls);
      v.bits.insert(v.bits.end(), api.begin(), api.end());
    }
    rows.push_back(std::move(v));
  }
  return build_matrix(std::move(rows), feature_names(set));
}

std::vector<std::uint8_t> synthetic_apk(const SyntheticApp& app) {
  DexClassSpec main{"Lcom/synth/Main;", {}};
  for (std::size_t m = 0; m < app.methods.size(); ++m) main.methods.push_back({method_name(m), app.methods[m].opcodes});
  std::vector<DexMethodRef> refs;
  for (const auto& api : app.api_calls) refs.push_back({"Landroid/synth/Framework;", api});
  const std::vector<DexClassSpec> classes{main};
  auto dex = write_dex(classes, refs);

  std::string package = "com.synth." + app.app_id.substr(app.app_id.find('/') + 1);
  auto manifest = write_binary_manifest(package, app.permissions);
  return write_zip({{"AndroidManifest.xml", std::move(manifest)}, {"classes.dex", std::move(dex)}}, true);
}

void materialize_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  for (const auto& app : corpus.apps) {
    const auto bytes = synthetic_apk(app);
    write_text_file(dir / (app.app_id + ".apk"),
                    std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
}

}  // namespace dexdedup
