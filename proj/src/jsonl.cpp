#include "dexdedup/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "dexdedup/error.hpp"

namespace dexdedup {
namespace {

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      fn(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kInvalidInput, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

Label label_field(const Json& j) {
  return j.contains("label") ? parse_label(j.at("label").get<std::string>()) : Label::kUnlabeled;
}

}  // namespace

Json extraction_json(const Extraction& extraction, Label label) {
  Json methods = Json::array();
  for (const auto& s : extraction.sequences) {
    Json ops = Json::array();
    for (const auto b : s.opcodes) ops.push_back(static_cast<int>(b));
    methods.push_back({{"id", s.method_id}, {"opcodes", std::move(ops)}});
  }
  const auto& r = extraction.report;
  return Json{{"app_id", r.app_id},
              {"label", label_name(label)},
              {"methods", std::move(methods)},
              {"method_count", r.method_count},
              {"skipped_methods", r.skipped_methods},
              {"filtered_methods", r.filtered_methods},
              {"parse_warnings", r.parse_warnings}};
}

ExtractedApp extraction_from_json(const Json& j) {
  ExtractedApp app;
  app.label = label_field(j);
  auto& r = app.extraction.report;
  r.app_id = j.at("app_id").get<std::string>();
  for (const auto& m : j.at("methods")) {
    OpcodeSequence s;
    s.method_id = m.at("id").get<std::string>();
    for (const auto& op : m.at("opcodes")) {
      const int v = op.get<int>();
      if (v < 0 || v > 255) throw Error(ErrorCode::kInvalidInput, "opcode " + std::to_string(v) + " out of range");
      s.opcodes.push_back(static_cast<std::uint8_t>(v));
    }
    app.extraction.sequences.push_back(std::move(s));
  }
  r.method_count = j.value("method_count", app.extraction.sequences.size());
  r.skipped_methods = j.value("skipped_methods", std::size_t{0});
  r.filtered_methods = j.value("filtered_methods", std::size_t{0});
  r.parse_warnings = j.value("parse_warnings", std::vector<std::string>{});
  return app;
}

std::vector<ExtractedApp> read_extraction_jsonl(const std::filesystem::path& path) {
  std::vector<ExtractedApp> out;
  for_each_line(path, [&](const Json& j) { out.push_back(extraction_from_json(j)); });
  return out;
}

Json fingerprint_json(const AppFingerprint& fp) {
  return Json{{"app_id", fp.app_id},
              {"label", label_name(fp.label)},
              {"hashes", fp.hashes},
              {"source_method_count", fp.source_method_count}};
}

AppFingerprint fingerprint_from_json(const Json& j) {
  return make_fingerprint(j.at("app_id").get<std::string>(), label_field(j),
                          j.at("hashes").get<std::vector<std::uint64_t>>(),
                          j.value("source_method_count", std::size_t{0}));
}

std::vector<AppFingerprint> read_fingerprint_jsonl(const std::filesystem::path& path) {
  std::vector<AppFingerprint> out;
  for_each_line(path, [&](const Json& j) { out.push_back(fingerprint_from_json(j)); });
  return out;
}

std::string fingerprint_jsonl(std::span<const AppFingerprint> corpus) {
  std::string out;
  for (const auto& fp : corpus) out += fingerprint_json(fp).dump() + "\n";
  return out;
}

Json cluster_report_json(const ClusterSet& set) {
  Json clusters = Json::array();
  for (const auto& c : set.clusters) clusters.push_back({{"centroid", c.centroid_id}, {"members", c.member_ids}});
  return Json{{"epsilon", set.epsilon},
              {"seed", set.seed},
              {"mode", set.mode == VisitMode::kOrdered ? "ordered" : "random"},
              {"per_label", set.per_label},
              {"cluster_count", set.clusters.size()},
              {"clusters", std::move(clusters)}};
}

ClusterSet cluster_report_from_json(const Json& j) {
  try {
    ClusterSet set;
    set.epsilon = j.at("epsilon").get<double>();
    set.seed = j.value("seed", std::uint64_t{0});
    set.mode = j.value("mode", std::string("random")) == "ordered" ? VisitMode::kOrdered : VisitMode::kRandom;
    set.per_label = j.value("per_label", false);
    for (const auto& c : j.at("clusters")) {
      set.clusters.push_back({c.at("centroid").get<std::string>(), c.at("members").get<std::vector<std::string>>()});
    }
    return set;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("bad cluster report: ") + e.what());
  }
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "epsilon,cluster_count\n";
  for (const auto& p : points) out += format_real(p.epsilon) + "," + std::to_string(p.cluster_count) + "\n";
  return out;
}

Json metrics_json(const Metrics& m) {
  return Json{{"tpr", m.tpr}, {"fpr", m.fpr}, {"accuracy", m.accuracy}, {"precision", m.precision}, {"f1", m.f1}};
}

Json confusion_json(const Confusion& c) {
  return Json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

Json eval_report_json(const EvalReport& report) {
  Json protocol{{"kind", protocol_name(report.protocol)}};
  if (report.protocol == Protocol::kKFold) {
    protocol["k"] = report.folds;
    protocol["aggregation"] = "pooled confusion matrix";
  } else {
    protocol["train_ratio"] = report.train_ratio;
    protocol["train_size"] = report.train_size;
    protocol["test_size"] = report.test_size;
  }
  return Json{{"protocol", std::move(protocol)},
              {"seed", report.seed},
              {"confusion", confusion_json(report.confusion)},
              {"metrics", metrics_json(report.metrics)}};
}

Json info_gain_json(const InfoGainReport& report) {
  Json entries = Json::array();
  for (const auto& e : report.entries) entries.push_back({{"feature", e.feature}, {"gain", e.gain}});
  return entries;
}

Json inflation_json(const InflationResult& result) {
  Json runs = Json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"seed", r.seed},
                    {"before", eval_report_json(r.before)},
                    {"before_overlap", r.before_overlap},
                    {"before_attempts", r.before_attempts},
                    {"after", eval_report_json(r.after)},
                    {"after_overlap", r.after_overlap}});
  }
  return Json{{"corpus_size", result.corpus_size},
              {"distinct_fingerprints", result.distinct_fingerprints},
              {"duplicate_groups", result.duplicate_groups},
              {"mean_before_accuracy", result.mean_before_accuracy},
              {"mean_after_accuracy", result.mean_after_accuracy},
              {"runs", std::move(runs)}};
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_real(double v) { return Json(v).dump(); }

}  // namespace dexdedup
