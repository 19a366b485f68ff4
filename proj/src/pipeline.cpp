#include "dexdedup/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dexdedup/error.hpp"
#include "dexdedup/evaluation.hpp"
#include "dexdedup/extract.hpp"
#include "dexdedup/inflation.hpp"
#include "dexdedup/infogain.hpp"
#include "dexdedup/jsonl.hpp"
#include "dexdedup/parallel.hpp"
#include "dexdedup/rng.hpp"

namespace dexdedup {
namespace fs = std::filesystem;
namespace {

constexpr char kIncomplete[] = ".incomplete";
constexpr std::uint64_t kBalanceStream = 0x42414C;

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.detail());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, std::string("stage ") + name + ": " + e.what());
  }
}

std::string dataset_name(double eps) { return "eps_" + format_real(eps); }

Json label_counts(const FeatureMatrix& m) {
  std::size_t mal = 0;
  for (const auto& r : m.rows) mal += r.label == Label::kMalware;
  return Json{{"malware", mal}, {"goodware", m.rows.size() - mal}, {"total", m.rows.size()}};
}

FeatureMatrix slice_columns(const FeatureMatrix& m, std::size_t begin, std::size_t end) {
  FeatureMatrix out{{m.columns.begin() + static_cast<std::ptrdiff_t>(begin),
                     m.columns.begin() + static_cast<std::ptrdiff_t>(end)},
                    {}};
  for (const auto& r : m.rows) {
    out.rows.push_back({r.app_id, r.label,
                        {r.bits.begin() + static_cast<std::ptrdiff_t>(begin),
                         r.bits.begin() + static_cast<std::ptrdiff_t>(end)}});
  }
  return out;
}

FeatureMatrix rows_with_ids(const FeatureMatrix& m, const std::unordered_set<std::string>& ids) {
  FeatureMatrix out{m.columns, {}};
  for (const auto& r : m.rows) {
    if (ids.contains(r.app_id)) out.rows.push_back(r);
  }
  return out;
}

void log_line(std::ostream* log, const std::string& text) {
  if (log != nullptr) *log << text << '\n';
}

}  // namespace

std::vector<AppInput> discover_apps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "input directory " + dir.string() + " does not exist");
  std::vector<AppInput> apps;
  std::set<std::string> ids;
  for (const Label label : {Label::kMalware, Label::kGoodware}) {
    const fs::path sub = dir / std::string(label_name(label));
    if (!fs::is_directory(sub)) continue;
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(sub)) {
      if (e.path().filename().string().starts_with(".")) continue;
      if (e.is_regular_file() || e.is_directory()) entries.push_back(e.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& p : entries) {
      const std::string stem = fs::is_directory(p) ? p.filename().string() : p.stem().string();
      AppInput in{p, std::string(label_name(label)) + "/" + stem, label};
      if (!ids.insert(in.app_id).second) {
        throw Error(ErrorCode::kDuplicateAppId, "two inputs map to app id '" + in.app_id + "' (" + p.string() + ")");
      }
      apps.push_back(std::move(in));
    }
  }
  return apps;
}

void validate_pipeline_config(const PipelineConfig& config) {
  if (config.input_dir.empty()) throw Error(ErrorCode::kInvalidConfig, "no input directory");
  if (config.out_dir.empty()) throw Error(ErrorCode::kInvalidConfig, "no output directory (--out)");
  for (const double e : config.sweep_grid) validate_epsilon(e);
  for (const double e : config.filter_epsilons) validate_epsilon(e);
  if (config.kfold < 2) throw Error(ErrorCode::kInvalidConfig, "k-fold needs k >= 2");
  if (config.forest.tree_count == 0) throw Error(ErrorCode::kInvalidConfig, "tree count must be at least 1");
  if (config.min_length == 0) throw Error(ErrorCode::kInvalidConfig, "min length must be at least 1");
  const std::size_t widest = feature_names(config.feature_set == FeatureSet::kApiCalls ? FeatureSet::kApiCalls
                                                                                        : FeatureSet::kPermissions)
                                 .size();
  if (config.forest.features_per_split > widest) {
    throw Error(ErrorCode::kInvalidConfig, "features per split exceeds the feature count");
  }
}

void run_pipeline(const PipelineConfig& config, RunManifest manifest, std::ostream* log) {
  validate_pipeline_config(config);
  fs::create_directories(config.out_dir);
  const fs::path out = config.out_dir;
  write_text_file(out / kIncomplete, "run in progress or failed\n");

  const auto grid = config.sweep_grid.empty() ? parse_epsilon_grid("0:1:0.1") : config.sweep_grid;
  Json summary;
  std::vector<std::string> warnings;

  // Extract and featurize every app.
  struct AppResult {
    Extraction extraction;
    FeatureVector features;
    std::string feature_warning;
    std::string failure;
  };
  const auto inputs = stage("extract", [&] { return discover_apps(config.input_dir); });
  if (inputs.empty()) {
    throw Error(ErrorCode::kEmptyCorpus,
                "stage extract: no apps under " + config.input_dir.string() + "/{malware,goodware}");
  }
  log_line(log, "extract: " + std::to_string(inputs.size()) + " apps");
  std::vector<AppResult> results(inputs.size());
  stage("extract", [&] {
    parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
      const auto& in = inputs[i];
      try {
        results[i].extraction = extract_app(in.path, InputFormat::kAuto, in.app_id, {config.min_length});
        results[i].features = app_features(in.path, InputFormat::kAuto, FeatureSet::kBoth, in.app_id, in.label,
                                           &results[i].feature_warning);
      } catch (const Error& e) {
        if (!config.keep_going) throw Error(e.code(), in.path.string() + ": " + e.detail());
        results[i].failure = in.path.string() + ": " + e.what();
      }
    });
    return 0;
  });

  std::string extraction_jsonl;
  std::vector<AppFingerprint> corpus;
  std::vector<FeatureVector> feature_rows;
  std::size_t methods = 0, skipped = 0, parse_warnings = 0;
  stage("fingerprint", [&] {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      auto& r = results[i];
      if (!r.failure.empty()) {
        warnings.push_back("skipped " + r.failure);
        continue;
      }
      if (r.extraction.sequences.empty() && config.keep_going) {
        warnings.push_back("skipped " + inputs[i].path.string() + ": no method bodies");
        continue;
      }
      if (!r.feature_warning.empty()) warnings.push_back(r.feature_warning);
      extraction_jsonl += extraction_json(r.extraction, inputs[i].label).dump() + "\n";
      methods += r.extraction.report.method_count;
      skipped += r.extraction.report.skipped_methods;
      parse_warnings += r.extraction.report.parse_warnings.size();
      try {
        corpus.push_back(fingerprint_of(r.extraction.sequences, inputs[i].app_id, inputs[i].label));
      } catch (const Error& e) {
        throw Error(e.code(), inputs[i].path.string() + ": " + e.detail());
      }
      feature_rows.push_back(std::move(r.features));
    }
    if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "every app failed extraction");
    write_text_file(out / "extraction.jsonl", extraction_jsonl);
    write_text_file(out / "fingerprints.jsonl", fingerprint_jsonl(corpus));
    return 0;
  });
  results.clear();
  summary["extraction"] = {{"methods", methods}, {"skipped_methods", skipped}, {"parse_warnings", parse_warnings}};
  log_line(log, "fingerprint: " + std::to_string(corpus.size()) + " apps, " + std::to_string(methods) + " methods");

  const ClusterSet exact = stage("cluster", [&] { return dedup_at_zero(corpus); });
  summary["distinct_fingerprints"] = exact.clusters.size();
  summary["duplicate_fraction"] =
      1.0 - static_cast<double>(exact.clusters.size()) / static_cast<double>(corpus.size());

  stage("sweep", [&] {
    const auto points = epsilon_sweep(corpus, grid, config.seed, config.mode, false);
    write_text_file(out / "sweep.csv", sweep_csv(points));
    Json js = Json::array();
    for (const auto& p : points) js.push_back({{"epsilon", p.epsilon}, {"cluster_count", p.cluster_count}});
    summary["sweep"] = js;
    for (const Label label : {Label::kMalware, Label::kGoodware}) {
      std::vector<AppFingerprint> subset;
      for (const auto& fp : corpus) {
        if (fp.label == label) subset.push_back(fp);
      }
      if (subset.empty()) continue;
      const auto pts = epsilon_sweep(subset, grid, config.seed, config.mode, false);
      write_text_file(out / ("sweep_" + std::string(label_name(label)) + ".csv"), sweep_csv(pts));
    }
    return 0;
  });
  log_line(log, "sweep: " + std::to_string(grid.size()) + " epsilons");

  const FeatureMatrix all_features = stage("features", [&] {
    return build_matrix(std::move(feature_rows), feature_names(FeatureSet::kBoth));
  });

  // Datasets: the full corpus, then one filtered corpus per filter epsilon.
  std::vector<std::pair<std::string, FeatureMatrix>> datasets{{"overall", all_features}};
  summary["datasets"]["overall"] = label_counts(all_features);
  stage("cluster", [&] {
    for (const double eps : config.filter_epsilons) {
      const std::string name = dataset_name(eps);
      const auto set = config.per_label ? cluster_per_label(corpus, eps, config.seed, config.mode)
                                        : cluster_corpus(corpus, eps, config.seed, config.mode);
      write_text_file(out / "clusters" / (name + ".json"), dump_json(cluster_report_json(set)));
      const auto reps = filter_representatives(corpus, set);
      write_text_file(out / "filtered" / (name + ".jsonl"), fingerprint_jsonl(reps));
      std::unordered_set<std::string> ids;
      for (const auto& r : reps) ids.insert(r.app_id);
      auto matrix = rows_with_ids(all_features, ids);
      summary["datasets"][name] = label_counts(matrix);
      summary["clusters"][name] = {{"cluster_count", set.clusters.size()},
                                   {"file", "clusters/" + name + ".json"},
                                   {"epsilon", eps}};
      datasets.emplace_back(name, std::move(matrix));
      log_line(log, "cluster: eps " + format_real(eps) + " -> " + std::to_string(set.clusters.size()) + " clusters");
    }
    return 0;
  });

  std::vector<FeatureSet> sets;
  if (config.feature_set != FeatureSet::kApiCalls) sets.push_back(FeatureSet::kPermissions);
  if (config.feature_set != FeatureSet::kPermissions) sets.push_back(FeatureSet::kApiCalls);
  const std::size_t n_perm = feature_names(FeatureSet::kPermissions).size();

  ForestConfig forest = config.forest;
  forest.seed = config.seed;
  for (const FeatureSet set : sets) {
    const std::string set_name(feature_set_name(set));
    for (const auto& [ds_name, full] : datasets) {
      const auto matrix = set == FeatureSet::kPermissions ? slice_columns(full, 0, n_perm)
                                                          : slice_columns(full, n_perm, full.width());
      const std::string base = set_name + "_" + ds_name;
      stage("features", [&] {
        write_text_file(out / "features" / (base + ".csv"), write_csv(matrix));
        return 0;
      });
      stage("infogain", [&] {
        try {
          const auto ig = information_gain(matrix);
          write_text_file(out / "infogain" / (base + ".csv"), info_gain_csv(ig));
          for (const auto& w : ig.warnings) warnings.push_back(base + ": " + w);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateLabels) throw;
          warnings.push_back(base + ": information gain skipped: " + e.detail());
        }
        return 0;
      });
      stage("evaluate", [&] {
        auto evaluate = [&](const FeatureMatrix& m, const std::string& name) {
          Json entry;
          try {
            const auto report = kfold_evaluate(m, config.kfold, forest, config.seed, config.jobs);
            write_text_file(out / "eval" / (name + ".json"), dump_json(eval_report_json(report)));
            entry = {{"metrics", metrics_json(report.metrics)},
                     {"confusion", confusion_json(report.confusion)},
                     {"file", "eval/" + name + ".json"}};
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kTooFewSamples && e.code() != ErrorCode::kDegenerateLabels) throw;
            entry = {{"skipped", e.detail()}};
            warnings.push_back(name + ": evaluation skipped: " + e.detail());
          }
          return entry;
        };
        summary["evaluations"][set_name][ds_name] = evaluate(matrix, base);
        if (config.balance) {
          try {
            const auto balanced = balance_dataset(matrix, child_seed(config.seed, kBalanceStream));
            write_text_file(out / "features" / (base + "_balanced.csv"), write_csv(balanced));
            summary["evaluations"][set_name][ds_name + "_balanced"] = evaluate(balanced, base + "_balanced");
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kDegenerateLabels) throw;
            summary["evaluations"][set_name][ds_name + "_balanced"] = {{"skipped", e.detail()}};
          }
        }
        return 0;
      });
      log_line(log, "evaluate: " + base);
    }
  }

  stage("inflation", [&] {
    InflationConfig ic;
    ic.seed = config.seed;
    ic.seeds = config.inflation_seeds;
    ic.forest = forest;
    ic.jobs = config.jobs;
    try {
      const auto result = holdout_inflation_demo(corpus, all_features, ic);
      write_text_file(out / "inflation.json", dump_json(inflation_json(result)));
      summary["inflation"] = {{"mean_before_accuracy", result.mean_before_accuracy},
                              {"mean_after_accuracy", result.mean_after_accuracy},
                              {"seeds", result.runs.size()},
                              {"file", "inflation.json"}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoDuplicates && e.code() != ErrorCode::kTooFewSamples &&
          e.code() != ErrorCode::kDegenerateLabels) {
        throw;
      }
      summary["inflation"] = {{"skipped", e.detail()}};
    }
    return 0;
  });

  summary["apps"] = label_counts(all_features);
  summary["warnings"] = warnings;
  summary["config"] = {{"seed", config.seed},
                       {"kfold", config.kfold},
                       {"per_label", config.per_label},
                       {"mode", config.mode == VisitMode::kOrdered ? "ordered" : "random"},
                       {"trees", config.forest.tree_count},
                       {"max_depth", config.forest.max_depth},
                       {"features_per_split", config.forest.features_per_split},
                       {"bootstrap", config.forest.bootstrap},
                       {"balance", config.balance},
                       {"min_length", config.min_length},
                       {"feature_set", std::string(feature_set_name(config.feature_set))}};
  stage("report", [&] {
    write_text_file(out / "summary.json", dump_json(summary));
    manifest.timestamp = current_timestamp();
    write_text_file(out / "manifest.json", dump_json(manifest.to_json()));
    fs::remove(out / kIncomplete);
    return 0;
  });
  log_line(log, "done: " + out.string());
}

std::string pipeline_report(const fs::path& dir) {
  auto require = [&](const fs::path& rel) {
    if (!fs::exists(dir / rel)) throw Error(ErrorCode::kMissingArtifact, (dir / rel).string() + " not found");
  };
  if (fs::exists(dir / kIncomplete)) {
    throw Error(ErrorCode::kMissingArtifact, dir.string() + " holds an incomplete run");
  }
  require("summary.json");
  require("fingerprints.jsonl");
  require("sweep.csv");
  const Json s = read_json_file(dir / "summary.json");
  for (const auto& [name, c] : s.at("clusters").items()) require(c.at("file").get<std::string>());

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  const auto& apps = s.at("apps");
  os << "apps: " << apps.at("total").get<std::size_t>() << " (malware " << apps.at("malware").get<std::size_t>()
     << ", goodware " << apps.at("goodware").get<std::size_t>() << ")\n";
  os << "distinct fingerprints: " << s.at("distinct_fingerprints").get<std::size_t>() << "\n";
  os << "duplicate fraction: " << s.at("duplicate_fraction").get<double>() << "\n";

  os << "sweep (epsilon -> clusters):\n";
  for (const auto& p : s.at("sweep")) {
    os << "  " << format_real(p.at("epsilon").get<double>()) << " -> " << p.at("cluster_count").get<std::size_t>()
       << "\n";
  }
  os << "dataset sizes (malware / goodware / total):\n";
  for (const auto& [name, d] : s.at("datasets").items()) {
    os << "  " << name << ": " << d.at("malware").get<std::size_t>() << " / " << d.at("goodware").get<std::size_t>()
       << " / " << d.at("total").get<std::size_t>();
    if (s.at("clusters").contains(name)) {
      os << " (" << s.at("clusters").at(name).at("cluster_count").get<std::size_t>() << " clusters)";
    }
    os << "\n";
  }

  if (s.contains("evaluations")) {
    for (const auto& [set, per_ds] : s.at("evaluations").items()) {
      os << "metrics, " << set << " (TPR FPR Accuracy Precision F1):\n";
      const Json* overall = per_ds.contains("overall") && per_ds.at("overall").contains("metrics")
                                ? &per_ds.at("overall").at("metrics")
                                : nullptr;
      for (const auto& [ds, e] : per_ds.items()) {
        os << "  " << ds << ": ";
        if (!e.contains("metrics")) {
          os << "skipped (" << e.at("skipped").get<std::string>() << ")\n";
          continue;
        }
        const auto& m = e.at("metrics");
        os << m.at("tpr").get<double>() << " " << m.at("fpr").get<double>() << " " << m.at("accuracy").get<double>()
           << " " << m.at("precision").get<double>() << " " << m.at("f1").get<double>();
        if (overall != nullptr && ds != "overall") {
          const double d = m.at("accuracy").get<double>() - overall->at("accuracy").get<double>();
          os << "  (accuracy delta vs overall " << (d >= 0 ? "+" : "") << d << ")";
        }
        os << "\n";
      }
    }
  }
  if (s.contains("inflation")) {
    const auto& inf = s.at("inflation");
    if (inf.contains("skipped")) {
      os << "holdout inflation: skipped (" << inf.at("skipped").get<std::string>() << ")\n";
    } else {
      os << "holdout inflation: mean accuracy before dedup " << inf.at("mean_before_accuracy").get<double>()
         << ", after " << inf.at("mean_after_accuracy").get<double>() << " over "
         << inf.at("seeds").get<std::size_t>() << " seeds\n";
    }
  }
  const auto& w = s.at("warnings");
  if (!w.empty()) os << "warnings: " << w.size() << "\n";
  return os.str();
}

}  // namespace dexdedup
