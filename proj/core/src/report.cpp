#include "screenkit/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"
#include "screenkit/image_io.hpp"
#include "screenkit/parallel.hpp"

#ifndef SCREENKIT_VERSION
#define SCREENKIT_VERSION "0.0.0"
#endif

namespace screenkit {

using nlohmann::ordered_json;

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kDevelop: return "develop";
    case RunMode::kInternalTest: return "internal_test";
    case RunMode::kExternal: return "external";
    case RunMode::kAudit: return "audit";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view text) {
  const std::string t = csv::to_lower(text);
  if (t == "develop") return RunMode::kDevelop;
  if (t == "internal_test" || t == "internal-test") return RunMode::kInternalTest;
  if (t == "external") return RunMode::kExternal;
  if (t == "audit") return RunMode::kAudit;
  throw ConfigError("unknown run mode '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  switch (mode) {
    case RunMode::kDevelop:
      if (score_path.empty()) throw ConfigError("develop run needs a score table");
      break;
    case RunMode::kInternalTest:
    case RunMode::kExternal:
      if (score_path.empty()) throw ConfigError("fixed run needs a score table");
      if (!tau) throw ConfigError("fixed-threshold run needs tau");
      if (!(*tau >= 0.0 && *tau <= 1.0)) throw ConfigError("tau must be in [0, 1]");
      if (severe_tau && !(*severe_tau >= 0.0 && *severe_tau <= 1.0)) {
        throw ConfigError("severe tau must be in [0, 1]");
      }
      break;
    case RunMode::kAudit:
      if (manifest_paths.empty()) throw ConfigError("audit run needs a manifest");
      if (max_distance < 0 || max_distance > 64) {
        throw ConfigError("max distance must be in [0, 64]");
      }
      break;
  }
  try {
    policy.validate();
    bootstrap.validate();
    preprocess.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

namespace {

ReportedInterval bracket(ConfidenceInterval ci) {
  ReportedInterval out{ci, false};
  if (ci.point < ci.low || ci.point > ci.high) {
    out.ci.low = std::min(ci.low, ci.point);
    out.ci.high = std::max(ci.high, ci.point);
    out.extended_to_point = true;
  }
  return out;
}

TscoreBlock evaluate_tscores(const PairedValues& pairs, const RunConfig& config,
                             std::vector<std::string>& warnings) {
  TscoreBlock block;
  block.stratified = config.stratify_regression;
  block.metrics = regression_metrics(pairs.pred, pairs.ref);
  const std::size_t n = pairs.pred.size();
  if (block.metrics.pearson_r) {
    if (n >= 4 && std::abs(*block.metrics.pearson_r) < 1.0) {
      block.pearson_ci = fisher_z_ci(*block.metrics.pearson_r, n, config.bootstrap.ci_level);
    } else {
      warnings.push_back("tscore: Fisher z interval skipped (needs n >= 4 and |r| < 1)");
    }
  } else {
    warnings.push_back("tscore: Pearson r undefined (zero variance)");
  }
  if (n >= 2) {
    block.bland_altman = bland_altman(pairs.pred, pairs.ref);
    const PairedMetric metrics[] = {
        [](std::span<const double> p, std::span<const double> r) -> std::optional<double> {
          return regression_metrics(p, r).mae;
        },
        [](std::span<const double> p, std::span<const double> r) -> std::optional<double> {
          return regression_metrics(p, r).rmse;
        }};
    const std::span<const int> strata =
        config.stratify_regression ? std::span<const int>(pairs.strata)
                                   : std::span<const int>();
    const auto cis = paired_bootstrap_cis(pairs.pred, pairs.ref, strata, metrics,
                                          config.bootstrap);
    block.intervals["mae"] = bracket(cis[0]);
    block.intervals["rmse"] = bracket(cis[1]);
  }
  return block;
}

void add_tscore_block(const ScoreTable& rows, const RunConfig& config,
                      EvaluationReport& report) {
  const PairedValues pairs = rows.tscores();
  if (pairs.pred.empty()) return;
  report.tscore = evaluate_tscores(pairs, config, report.warnings);
}

EvaluationReport base_report(const RunConfig& config) {
  EvaluationReport report;
  report.mode = config.mode;
  report.seed = config.bootstrap.seed;
  report.replicates = config.bootstrap.replicates;
  report.ci_level = config.bootstrap.ci_level;
  return report;
}

bool two_class(const LabeledScores& data) {
  const std::size_t p = data.positives();
  return !data.labels.empty() && p > 0 && p < data.size();
}

constexpr std::string_view kSeverityPositive = "Osteoporosis";

}  // namespace

ClassificationBlock evaluate_classification(const LabeledScores& data, double tau,
                                            std::string positive_class,
                                            const BootstrapConfig& bootstrap) {
  data.validate_two_class();
  ClassificationBlock block;
  block.positive_class = std::move(positive_class);
  block.n = data.size();
  block.positives = data.positives();
  block.tau = tau;
  block.roc = roc_curve(data);
  block.pr = pr_curve(data);
  block.brier = brier(data);
  block.counts = confusion_at(data, tau);
  block.metrics = operating_point_metrics(block.counts);

  std::vector<std::string> names = {"auroc", "auprc", "brier"};
  for (const auto& name : operating_point_metric_names()) {
    if (field(block.metrics, name)) names.push_back(name);
  }
  std::vector<ScoreMetric> metrics;
  metrics.reserve(names.size());
  for (const auto& name : names) metrics.push_back(named_metric(name, tau));
  const auto cis = stratified_bootstrap_cis(data, metrics, bootstrap);
  for (std::size_t k = 0; k < names.size(); ++k) {
    block.intervals[names[k]] = bracket(cis[k]);
  }
  return block;
}

EvaluationReport run_develop(const RunConfig& config) {
  config.validate();
  EvaluationReport report = base_report(config);
  report.input_digests.emplace_back("scores", file_sha256(config.score_path));
  const ScoreTable table = read_score_table(config.score_path);
  const ScoreTable val = table.only(Split::kVal);
  if (val.rows.empty()) throw ValidationError("score table has no validation rows");
  const LabeledScores screening = val.screening();
  if (!two_class(screening)) {
    throw ValidationError("validation rows must contain both Normal and Bone-Loss cases");
  }

  const PolicySelection sel = select_threshold(screening, config.policy);
  if (!sel.feasible) {
    report.warnings.push_back(
        "screening: no grid threshold meets the sensitivity floor; fallback tau reported");
  }
  report.screening = evaluate_classification(screening, sel.tau_star, "BoneLoss",
                                              config.bootstrap);
  report.screening->selection = sel;

  if (val.severity_rows() > 0) {
    const LabeledScores severity = val.severity();
    if (two_class(severity)) {
      const PolicySelection sev = select_threshold(severity, config.policy);
      if (!sev.feasible) {
        report.warnings.push_back(
            "severity: no grid threshold meets the sensitivity floor; fallback tau reported");
      }
      report.severity = evaluate_classification(
          severity, sev.tau_star, std::string(kSeverityPositive), config.bootstrap);
      report.severity->selection = sev;
    } else {
      report.warnings.push_back("severity: Bone-Loss rows hold a single class; block omitted");
    }
  }
  add_tscore_block(val, config, report);
  return report;
}

EvaluationReport run_fixed(const RunConfig& config) {
  config.validate();
  EvaluationReport report = base_report(config);
  report.input_digests.emplace_back("scores", file_sha256(config.score_path));
  const ScoreTable table = read_score_table(config.score_path);
  const ScoreTable rows = config.split ? table.only(*config.split) : table;
  if (rows.rows.empty()) throw ValidationError("no score rows to evaluate");
  const LabeledScores screening = rows.screening();
  if (!two_class(screening)) {
    throw ValidationError("evaluation rows must contain both Normal and Bone-Loss cases");
  }
  report.screening =
      evaluate_classification(screening, *config.tau, "BoneLoss", config.bootstrap);

  if (rows.severity_rows() > 0) {
    const LabeledScores severity = rows.severity();
    if (two_class(severity)) {
      report.severity =
          evaluate_classification(severity, config.severe_tau.value_or(*config.tau),
                                  std::string(kSeverityPositive), config.bootstrap);
    } else {
      report.warnings.push_back("severity: Bone-Loss rows hold a single class; block omitted");
    }
  }
  add_tscore_block(rows, config, report);
  return report;
}

EvaluationReport run_audit(const RunConfig& config) {
  config.validate();
  EvaluationReport report = base_report(config);
  AuditBlock audit;
  audit.max_distance = config.max_distance;
  audit.hashed_preprocessed = config.hash_preprocessed;

  SplitManifest merged;
  for (std::size_t i = 0; i < config.manifest_paths.size(); ++i) {
    const std::string& path = config.manifest_paths[i];
    report.input_digests.emplace_back("manifest", file_sha256(path));
    SplitManifest m = read_manifest(path);
    if (i == 0) {
      merged = std::move(m);
      continue;
    }
    MergeResult result = merge_stages(merged, m);
    audit.merge_collisions += result.collisions;
    for (auto& w : result.warnings) report.warnings.push_back("merge: " + w);
    merged = std::move(result.manifest);
  }
  audit.composition = composition_table(merged);

  const std::size_t n = merged.records.size();
  std::vector<std::optional<PhashDigest>> digests(n);
  std::vector<std::string> file_digests(n);
  std::vector<std::string> errors(n);
  const std::filesystem::path root(config.image_dir);
  parallel_for(n, resolve_thread_count(config.threads), [&](std::size_t i) {
    const SampleRecord& r = merged.records[i];
    const std::filesystem::path rel(r.image_path);
    const std::string path =
        (rel.is_absolute() || config.image_dir.empty() ? rel : root / rel).string();
    try {
      const RawImage raw = read_image(path);
      const GrayImage gray = config.hash_preprocessed
                                 ? preprocess(raw, config.preprocess)
                                 : to_grayscale(raw);
      digests[i] = phash64(gray);
      file_digests[i] = file_sha256(path);
    } catch (const Error& e) {
      errors[i] = r.sample_id + ": " + e.what();
    }
  });

  SplitManifest scanned;
  std::map<std::string, PhashDigest> by_id;
  std::string image_index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!digests[i]) {
      audit.unreadable.push_back(errors[i]);
      continue;
    }
    scanned.records.push_back(merged.records[i]);
    by_id.emplace(merged.records[i].sample_id, *digests[i]);
    image_index += merged.records[i].sample_id + ":" + file_digests[i] + "\n";
  }
  audit.hashed = scanned.records.size();
  report.input_digests.emplace_back("images", sha256_hex(image_index));
  audit.leakage = leakage_scan(scanned, by_id, config.max_distance);
  if (!audit.unreadable.empty()) {
    report.warnings.push_back(std::to_string(audit.unreadable.size()) +
                              " image(s) could not be read");
  }
  report.audit = std::move(audit);
  return report;
}

EvaluationReport run(const RunConfig& config) {
  switch (config.mode) {
    case RunMode::kDevelop: return run_develop(config);
    case RunMode::kInternalTest:
    case RunMode::kExternal: return run_fixed(config);
    case RunMode::kAudit: return run_audit(config);
  }
  throw ConfigError("unknown run mode");
}

int EvaluationReport::exit_code() const {
  if (audit && !audit->leakage.empty()) return kExitAuditFindings;
  return kExitClean;
}

namespace {

ordered_json opt_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json interval_json(const ReportedInterval& r, double level) {
  ordered_json j;
  j["point"] = r.ci.point;
  j["low"] = r.ci.low;
  j["high"] = r.ci.high;
  j["level"] = level;
  j["undefined_replicates"] = r.ci.undefined_replicates;
  j["extended_to_point"] = r.extended_to_point;
  return j;
}

ordered_json counts_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

ordered_json metrics_json(const OperatingPointMetrics& m) {
  ordered_json j;
  ordered_json undefined = ordered_json::array();
  for (const auto& name : operating_point_metric_names()) {
    const auto v = field(m, name);
    j[name] = opt_json(v);
    if (!v) undefined.push_back(name);
  }
  j["undefined"] = undefined;
  return j;
}

// Curve thresholds start at +inf, which JSON cannot carry; emit null.
ordered_json thresholds_json(const std::vector<double>& t) {
  ordered_json j = ordered_json::array();
  for (double v : t) j.push_back(std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr));
  return j;
}

ordered_json selection_json(const PolicySelection& s) {
  return {{"tau_star", s.tau_star},
          {"feasible", s.feasible},
          {"feasible_set_size", s.feasible_set_size},
          {"counts", counts_json(s.counts_at_tau)},
          {"metrics", metrics_json(s.metrics_at_tau)}};
}

ordered_json classification_json(const ClassificationBlock& b, double level) {
  ordered_json j;
  j["positive_class"] = b.positive_class;
  j["n"] = b.n;
  j["positives"] = b.positives;
  j["negatives"] = b.n - b.positives;
  j["tau"] = b.tau;
  if (b.selection) j["selection"] = selection_json(*b.selection);
  j["auroc"] = b.roc.auroc;
  j["auprc"] = b.pr.auprc;
  j["auprc_baseline"] = b.pr.baseline;
  j["brier"] = b.brier;
  j["confusion"] = counts_json(b.counts);
  j["operating_point"] = metrics_json(b.metrics);
  ordered_json cis;
  for (const auto& [name, ci] : b.intervals) cis[name] = interval_json(ci, level);
  j["intervals"] = cis;
  j["roc_curve"] = {{"fpr", b.roc.fpr},
                    {"tpr", b.roc.tpr},
                    {"threshold", thresholds_json(b.roc.thresholds)}};
  j["pr_curve"] = {{"recall", b.pr.recall},
                   {"precision", b.pr.precision},
                   {"threshold", thresholds_json(b.pr.thresholds)}};
  return j;
}

ordered_json tscore_json(const TscoreBlock& b, double level) {
  ordered_json j;
  j["n"] = b.metrics.n;
  j["mae"] = b.metrics.mae;
  j["rmse"] = b.metrics.rmse;
  j["pearson_r"] = opt_json(b.metrics.pearson_r);
  if (b.pearson_ci) {
    j["pearson_ci"] = {{"method", "fisher_z"},
                       {"low", b.pearson_ci->low},
                       {"high", b.pearson_ci->high},
                       {"level", level}};
  } else {
    j["pearson_ci"] = nullptr;
  }
  if (b.bland_altman) {
    j["bland_altman"] = {{"n", b.bland_altman->n},
                         {"bias", b.bland_altman->bias},
                         {"sd", b.bland_altman->sd},
                         {"loa_low", b.bland_altman->loa_low},
                         {"loa_high", b.bland_altman->loa_high}};
  } else {
    j["bland_altman"] = nullptr;
  }
  j["bootstrap_stratified"] = b.stratified;
  ordered_json cis = ordered_json::object();
  for (const auto& [name, ci] : b.intervals) cis[name] = interval_json(ci, level);
  j["intervals"] = cis;
  return j;
}

ordered_json audit_json(const AuditBlock& a) {
  ordered_json comp;
  static constexpr Split kSplits[] = {Split::kTrain, Split::kVal, Split::kTest,
                                      Split::kExternal};
  for (Split s : kSplits) {
    comp[std::string(to_string(s))] = {
        {"Normal", a.composition.count(s, ClassLabel::kNormal)},
        {"Osteopenia", a.composition.count(s, ClassLabel::kOsteopenia)},
        {"Osteoporosis", a.composition.count(s, ClassLabel::kOsteoporosis)},
        {"BoneLoss", a.composition.bone_loss(s)},
        {"total", a.composition.split_total(s)}};
  }
  comp["total"] = {
      {"Normal", a.composition.class_total(ClassLabel::kNormal)},
      {"Osteopenia", a.composition.class_total(ClassLabel::kOsteopenia)},
      {"Osteoporosis", a.composition.class_total(ClassLabel::kOsteoporosis)},
      {"BoneLoss", a.composition.bone_loss_total()},
      {"total", a.composition.grand_total()}};
  ordered_json pairs = ordered_json::array();
  for (const auto& p : a.leakage) {
    pairs.push_back({{"id_a", p.id_a},
                     {"split_a", to_string(p.split_a)},
                     {"id_b", p.id_b},
                     {"split_b", to_string(p.split_b)},
                     {"distance", p.distance}});
  }
  return {{"composition", comp},
          {"merge_collisions", a.merge_collisions},
          {"hashed_images", a.hashed},
          {"hash_source", a.hashed_preprocessed ? "preprocessed" : "original"},
          {"max_distance", a.max_distance},
          {"leakage_pairs", pairs},
          {"unreadable", a.unreadable}};
}

}  // namespace

std::string EvaluationReport::to_json() const {
  ordered_json doc;
  doc["schema"] = kReportSchema;
  ordered_json inputs = ordered_json::array();
  for (const auto& [role, digest] : input_digests) {
    inputs.push_back({{"role", role}, {"sha256", digest}});
  }
  doc["run"] = {{"mode", to_string(mode)},
                {"tool_version", SCREENKIT_VERSION},
                {"seed", seed},
                {"bootstrap_replicates", replicates},
                {"ci_level", ci_level},
                {"inputs", inputs}};
  if (screening) doc["screening"] = classification_json(*screening, ci_level);
  if (severity) doc["severity"] = classification_json(*severity, ci_level);
  if (tscore) doc["tscore"] = tscore_json(*tscore, ci_level);
  if (audit) doc["audit"] = audit_json(*audit);
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

}  // namespace screenkit
