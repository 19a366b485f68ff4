// dexdedup: opcode-fingerprint deduplication and evaluation of Android app corpora.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "dexdedup/cluster.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/evaluation.hpp"
#include "dexdedup/extract.hpp"
#include "dexdedup/features.hpp"
#include "dexdedup/fingerprint.hpp"
#include "dexdedup/inflation.hpp"
#include "dexdedup/infogain.hpp"
#include "dexdedup/jsonl.hpp"
#include "dexdedup/manifest.hpp"
#include "dexdedup/parallel.hpp"
#include "dexdedup/pipeline.hpp"
#include "dexdedup/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dexdedup;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  std::string out;
  bool quiet = false;
  unsigned jobs = 0;
};

struct ForestFlags {
  std::size_t trees = 100;
  std::size_t max_depth = 0;
  std::size_t features_per_split = 0;
  bool no_bootstrap = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "Trees per forest")->check(CLI::PositiveNumber);
    cmd->add_option("--max-depth", max_depth, "Tree depth limit (0 = unlimited)");
    cmd->add_option("--features-per-split", features_per_split, "Features scored per split (0 = ceil(sqrt(F)))");
    cmd->add_flag("--no-bootstrap", no_bootstrap, "Train every tree on the full training set");
  }
  ForestConfig config(const Globals& g) const {
    ForestConfig c;
    c.tree_count = trees;
    c.max_depth = max_depth;
    c.features_per_split = features_per_split;
    c.bootstrap = !no_bootstrap;
    c.seed = g.seed;
    c.jobs = g.jobs;
    return c;
  }
};

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

RunManifest manifest_for(const CLI::App& app, const CLI::App& cmd, const Globals& g) {
  RunManifest m;
  m.subcommand = cmd.get_name();
  for (const CLI::App* scope : {&app, &cmd}) {
    for (const CLI::Option* opt : scope->get_options()) {
      if (opt->count() == 0 || opt->get_name() == "--help") continue;
      std::string joined;
      for (const auto& r : opt->results()) joined += (joined.empty() ? "" : " ") + r;
      m.flags[opt->get_name()] = joined;
    }
  }
  m.seeds.push_back(g.seed);
  return m;
}

// Writes `text` to --out (plus a sidecar manifest) or stdout.
void emit(const CLI::App& app, const CLI::App& cmd, const Globals& g, std::string_view text,
          const std::vector<fs::path>& inputs) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  write_text_file(g.out, text);
  auto m = manifest_for(app, cmd, g);
  for (const auto& in : inputs) m.add_input(in);
  m.timestamp = current_timestamp();
  write_text_file(sidecar_path(g.out), dump_json(m.to_json()));
  note(g, "wrote " + g.out);
}

Label label_from_path(const fs::path& p, const std::string& forced) {
  if (!forced.empty()) return parse_label(forced);
  const auto parent = fs::absolute(p).lexically_normal().parent_path().filename().string();
  if (parent == "malware") return Label::kMalware;
  if (parent == "goodware") return Label::kGoodware;
  return Label::kUnlabeled;
}

std::string app_id_for(const fs::path& p, Label label) {
  const auto stem = fs::is_directory(p) ? fs::absolute(p).lexically_normal().filename().string() : p.stem().string();
  return label == Label::kUnlabeled ? stem : std::string(label_name(label)) + "/" + stem;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opcode-fingerprint deduplication and malware-detection evaluation for Android apps"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--out", g.out, "Output file (or directory for pipeline/synth)");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract per-method opcode sequences to JSONL");
  std::vector<std::string> extract_paths;
  std::string extract_format = "auto", extract_label;
  std::size_t min_length = 1;
  extract->add_option("paths", extract_paths, "DEX, APK or smali directory inputs")->required();
  extract->add_option("--format", extract_format, "auto|dex|apk|smali");
  extract->add_option("--label", extract_label, "Label for every input (default: parent directory name)");
  extract->add_option("--min-length", min_length, "Drop methods with fewer opcodes")->check(CLI::PositiveNumber);

  // fingerprint
  auto* fingerprint = app.add_subcommand("fingerprint", "Hash extracted sequences into app fingerprints");
  std::string fp_input;
  fingerprint->add_option("extraction", fp_input, "Extraction JSONL")->required();

  // distance
  auto* distance = app.add_subcommand("distance", "Ochiai distance between two apps");
  std::string dist_input;
  std::vector<std::string> pair;
  distance->add_option("fingerprints", dist_input, "Fingerprint JSONL")->required();
  distance->add_option("--pair", pair, "Two app ids")->expected(2)->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Leader clustering at one epsilon");
  std::string cl_input;
  double epsilon = 0.0;
  bool ordered = false, per_label = false;
  cluster->add_option("fingerprints", cl_input, "Fingerprint JSONL")->required();
  cluster->add_option("--epsilon", epsilon, "Distance threshold in [0, 1]")->required();
  cluster->add_flag("--ordered", ordered, "Visit apps in input order instead of at random");
  cluster->add_flag("--per-label", per_label, "Cluster malware and goodware separately");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Cluster counts over an epsilon grid (CSV)");
  std::string sw_input, grid_spec = "0:1:0.1";
  sweep->add_option("fingerprints", sw_input, "Fingerprint JSONL")->required();
  sweep->add_option("--grid", grid_spec, "lo:hi:step or comma list");
  sweep->add_flag("--ordered", ordered, "Visit apps in input order");
  sweep->add_flag("--per-label", per_label, "Cluster malware and goodware separately");

  // filter
  auto* filter = app.add_subcommand("filter", "Keep one representative per cluster");
  std::string fi_input, fi_report;
  filter->add_option("fingerprints", fi_input, "Fingerprint JSONL")->required();
  filter->add_option("--report", fi_report, "Cluster report JSON (otherwise cluster at --epsilon)");
  filter->add_option("--epsilon", epsilon, "Distance threshold when no report is given");
  filter->add_flag("--ordered", ordered, "Visit apps in input order");
  filter->add_flag("--per-label", per_label, "Cluster malware and goodware separately");

  // features
  auto* features = app.add_subcommand("features", "Permission / API-call feature CSV");
  std::vector<std::string> feat_paths;
  std::string feat_set = "both", feat_lists, feat_label, feat_format = "auto";
  features->add_option("apps", feat_paths, "APK, DEX or smali directory inputs");
  features->add_option("--set", feat_set, "permissions|apicalls|both");
  features->add_option("--from-lists", feat_lists,
                       "JSONL of {app_id, label, permissions: [...], api_calls: [...]} instead of apps");
  features->add_option("--label", feat_label, "Label for every input (default: parent directory name)");
  features->add_option("--format", feat_format, "auto|dex|apk|smali");

  // infogain
  auto* infogain = app.add_subcommand("infogain", "Rank features by information gain");
  std::string ig_input;
  bool ig_json = false;
  infogain->add_option("features", ig_input, "Feature CSV")->required();
  infogain->add_flag("--json", ig_json, "Emit JSON instead of CSV");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Stratified k-fold random forest evaluation");
  std::string ev_input;
  std::size_t kfold = 10;
  bool ev_balance = false;
  ForestFlags ev_forest;
  evaluate->add_option("features", ev_input, "Feature CSV")->required();
  evaluate->add_option("--kfold", kfold, "Number of folds");
  evaluate->add_flag("--balance", ev_balance, "Down-sample the majority class first");
  ev_forest.add_to(evaluate);

  // balance
  auto* balance = app.add_subcommand("balance", "Down-sample the majority class");
  std::string ba_input;
  balance->add_option("features", ba_input, "Feature CSV")->required();

  // inflation-demo
  auto* inflation = app.add_subcommand("inflation-demo", "Holdout accuracy with and without duplicates");
  std::string in_fp, in_feat;
  double ratio = 0.8;
  std::size_t in_seeds = 20, attempts = 50;
  ForestFlags in_forest;
  inflation->add_option("--fingerprints", in_fp, "Fingerprint JSONL")->required();
  inflation->add_option("--features", in_feat, "Feature CSV with app_id column")->required();
  inflation->add_option("--ratio", ratio, "Training fraction");
  inflation->add_option("--seeds", in_seeds, "Seeds to repeat over")->check(CLI::PositiveNumber);
  inflation->add_option("--attempts", attempts, "Duplicate-heavy splits tried per seed")->check(CLI::PositiveNumber);
  in_forest.add_to(inflation);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage into an artifact directory");
  PipelineConfig pc;
  std::string pl_input, pl_grid, pl_filter = "0,0.1,0.2", pl_set = "both";
  bool pl_global = false, pl_no_balance = false;
  ForestFlags pl_forest;
  pipeline->add_option("input", pl_input, "Directory with malware/ and goodware/ subdirectories")->required();
  pipeline->add_option("--grid", pl_grid, "Sweep grid (default 0:1:0.1)");
  pipeline->add_option("--filter-eps", pl_filter, "Epsilons for filtered datasets");
  pipeline->add_option("--set", pl_set, "permissions|apicalls|both");
  pipeline->add_option("--kfold", pc.kfold, "Number of folds");
  pipeline->add_option("--min-length", pc.min_length, "Drop methods with fewer opcodes");
  pipeline->add_option("--inflation-seeds", pc.inflation_seeds, "Seeds for the inflation demo");
  pipeline->add_flag("--global", pl_global, "Cluster the whole corpus at once instead of per label");
  pipeline->add_flag("--ordered", ordered, "Visit apps in input order");
  pipeline->add_flag("--no-balance", pl_no_balance, "Skip balanced-dataset evaluations");
  pipeline->add_flag("--keep-going", pc.keep_going, "Skip apps that fail to extract");
  pl_forest.add_to(pipeline);

  // report
  auto* report = app.add_subcommand("report", "Summarize a pipeline artifact directory");
  std::string rp_dir;
  report->add_option("artifacts", rp_dir, "Artifact directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Write the synthetic duplicated corpus as APKs");
  SyntheticConfig sc;
  std::string sy_fp, sy_feat;
  synth->add_option("--apps", sc.distinct_apps, "Distinct apps");
  synth->add_option("--duplication", sc.duplication, "Copies of each app");
  synth->add_option("--family-size", sc.family_size, "Distinct apps sharing a code base");
  synth->add_option("--divergence", sc.family_divergence, "Share of methods a family member rewrites");
  synth->add_option("--fingerprints", sy_fp, "Also write fingerprint JSONL here");
  synth->add_option("--features", sy_feat, "Also write feature CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*extract) {
      const auto format = parse_input_format(extract_format);
      std::string text;
      std::vector<fs::path> inputs;
      for (const auto& p : extract_paths) {
        const Label label = label_from_path(p, extract_label);
        auto ex = extract_app(p, format, app_id_for(p, label), {min_length});
        for (const auto& w : ex.report.parse_warnings) note(g, ex.report.app_id + ": " + w);
        text += extraction_json(ex, label).dump() + "\n";
        inputs.emplace_back(p);
      }
      emit(app, *extract, g, text, inputs);
    } else if (*fingerprint) {
      std::vector<AppFingerprint> corpus;
      for (const auto& app_ex : read_extraction_jsonl(fp_input)) {
        corpus.push_back(fingerprint_of(app_ex.extraction.sequences, app_ex.extraction.report.app_id, app_ex.label));
      }
      emit(app, *fingerprint, g, fingerprint_jsonl(corpus), {fp_input});
    } else if (*distance) {
      const auto corpus = read_fingerprint_jsonl(dist_input);
      const NeighborIndex index(corpus);
      const auto a = index.index_of(pair[0]);
      const auto b = index.index_of(pair[1]);
      if (!a || !b) throw Error(ErrorCode::kInvalidInput, "unknown app id '" + (a ? pair[1] : pair[0]) + "'");
      emit(app, *distance, g, format_real(index.distance(*a, *b)) + "\n", {dist_input});
    } else if (*cluster) {
      const auto corpus = read_fingerprint_jsonl(cl_input);
      const auto mode = ordered ? VisitMode::kOrdered : VisitMode::kRandom;
      const auto set = per_label ? cluster_per_label(corpus, epsilon, g.seed, mode)
                                 : cluster_corpus(corpus, epsilon, g.seed, mode);
      emit(app, *cluster, g, dump_json(cluster_report_json(set)), {cl_input});
    } else if (*sweep) {
      const auto corpus = read_fingerprint_jsonl(sw_input);
      const auto grid = parse_epsilon_grid(grid_spec);
      const auto points =
          epsilon_sweep(corpus, grid, g.seed, ordered ? VisitMode::kOrdered : VisitMode::kRandom, per_label);
      emit(app, *sweep, g, sweep_csv(points), {sw_input});
    } else if (*filter) {
      const auto corpus = read_fingerprint_jsonl(fi_input);
      ClusterSet set;
      std::vector<fs::path> inputs{fi_input};
      if (!fi_report.empty()) {
        set = cluster_report_from_json(read_json_file(fi_report));
        inputs.emplace_back(fi_report);
      } else {
        const auto mode = ordered ? VisitMode::kOrdered : VisitMode::kRandom;
        set = per_label ? cluster_per_label(corpus, epsilon, g.seed, mode)
                        : cluster_corpus(corpus, epsilon, g.seed, mode);
      }
      const auto reps = filter_representatives(corpus, set);
      note(g, "kept " + std::to_string(reps.size()) + " of " + std::to_string(corpus.size()) + " apps");
      emit(app, *filter, g, fingerprint_jsonl(reps), inputs);
    } else if (*features) {
      const auto set = parse_feature_set(feat_set);
      std::vector<FeatureVector> rows;
      std::vector<fs::path> inputs;
      if (!feat_lists.empty()) {
        std::ifstream in(feat_lists);
        if (!in) throw Error(ErrorCode::kIo, "cannot read " + feat_lists);
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          const auto j = Json::parse(line);
          std::vector<std::string> perms;
          for (const auto& p : j.value("permissions", std::vector<std::string>{})) {
            perms.push_back(p.find('.') == std::string::npos ? "android.permission." + p : p);
          }
          const auto apis = j.value("api_calls", std::vector<std::string>{});
          FeatureVector v{j.at("app_id").get<std::string>(), parse_label(j.value("label", "unlabeled")), {}};
          if (set != FeatureSet::kApiCalls) v.bits = permission_bits(perms);
          if (set != FeatureSet::kPermissions) {
            const auto b = api_call_bits(apis);
            v.bits.insert(v.bits.end(), b.begin(), b.end());
          }
          rows.push_back(std::move(v));
        }
        inputs.emplace_back(feat_lists);
      } else {
        if (feat_paths.empty()) throw Error(ErrorCode::kInvalidConfig, "give app paths or --from-lists");
        const auto format = parse_input_format(feat_format);
        rows.resize(feat_paths.size());
        std::vector<std::string> warn(feat_paths.size());
        parallel_for(feat_paths.size(), g.jobs, [&](std::size_t i) {
          const fs::path p = feat_paths[i];
          const Label label = label_from_path(p, feat_label);
          rows[i] = app_features(p, format, set, app_id_for(p, label), label, &warn[i]);
        });
        for (const auto& w : warn) {
          if (!w.empty()) note(g, w);
        }
        for (const auto& p : feat_paths) inputs.emplace_back(p);
      }
      const auto matrix = build_matrix(std::move(rows), feature_names(set));
      emit(app, *features, g, write_csv(matrix), inputs);
    } else if (*infogain) {
      const auto report_ig = information_gain(read_csv_file(ig_input));
      for (const auto& w : report_ig.warnings) note(g, w);
      emit(app, *infogain, g, ig_json ? dump_json(info_gain_json(report_ig)) : info_gain_csv(report_ig), {ig_input});
    } else if (*evaluate) {
      auto matrix = read_csv_file(ev_input);
      if (ev_balance) matrix = balance_dataset(matrix, g.seed);
      const auto forest = ev_forest.config(g);
      const auto rep = kfold_evaluate(matrix, kfold, forest, g.seed, g.jobs);
      auto j = eval_report_json(rep);
      j["info_gain"] = info_gain_json(information_gain(matrix));
      emit(app, *evaluate, g, dump_json(j), {ev_input});
    } else if (*balance) {
      emit(app, *balance, g, write_csv(balance_dataset(read_csv_file(ba_input), g.seed)), {ba_input});
    } else if (*inflation) {
      InflationConfig ic;
      ic.train_ratio = ratio;
      ic.seeds = in_seeds;
      ic.seed = g.seed;
      ic.max_attempts = attempts;
      ic.forest = in_forest.config(g);
      ic.jobs = g.jobs;
      const auto result = holdout_inflation_demo(read_fingerprint_jsonl(in_fp), read_csv_file(in_feat), ic);
      std::ostringstream os;
      os << "mean accuracy before dedup " << result.mean_before_accuracy << ", after " << result.mean_after_accuracy;
      note(g, os.str());
      emit(app, *inflation, g, dump_json(inflation_json(result)), {in_fp, in_feat});
    } else if (*pipeline) {
      pc.input_dir = pl_input;
      pc.out_dir = g.out;
      if (!pl_grid.empty()) pc.sweep_grid = parse_epsilon_grid(pl_grid);
      pc.filter_epsilons = parse_epsilon_grid(pl_filter);
      pc.seed = g.seed;
      pc.feature_set = parse_feature_set(pl_set);
      pc.forest = pl_forest.config(g);
      pc.balance = !pl_no_balance;
      pc.per_label = !pl_global;
      pc.mode = ordered ? VisitMode::kOrdered : VisitMode::kRandom;
      pc.jobs = g.jobs;
      validate_pipeline_config(pc);
      auto m = manifest_for(app, *pipeline, g);
      m.flags.erase("--out");
      m.flags.erase("--jobs");
      m.flags.erase("--quiet");
      m.add_input(pc.input_dir);
      run_pipeline(pc, std::move(m), g.quiet ? nullptr : &std::cerr);
    } else if (*report) {
      std::cout << pipeline_report(rp_dir);
    } else if (*synth) {
      if (g.out.empty()) throw Error(ErrorCode::kInvalidConfig, "synth needs --out <directory>");
      sc.seed = g.seed;
      const auto corpus = generate_synthetic_corpus(sc);
      materialize_corpus(corpus, g.out);
      if (!sy_fp.empty()) write_text_file(sy_fp, fingerprint_jsonl(corpus.fingerprints()));
      if (!sy_feat.empty()) write_text_file(sy_feat, write_csv(corpus.features()));
      note(g, "wrote " + std::to_string(corpus.apps.size()) + " apps to " + g.out);
    }
  } catch (const Error& e) {
    std::cerr << "dexdedup " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return e.code() == ErrorCode::kInvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "dexdedup " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
