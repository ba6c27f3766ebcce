#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "screenkit/audit.hpp"
#include "screenkit/image.hpp"
#include "screenkit/metrics.hpp"
#include "screenkit/score_table.hpp"
#include "screenkit/stats.hpp"
#include "screenkit/threshold.hpp"

namespace screenkit {

inline constexpr std::string_view kReportSchema = "screenkit.report/1";

// Exit codes of the command-line tool.
inline constexpr int kExitClean = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitAuditFindings = 3;

enum class RunMode { kDevelop, kInternalTest, kExternal, kAudit };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view text);

struct RunConfig {
  RunMode mode = RunMode::kDevelop;
  std::string score_path;
  // Audit input. Several manifests are merged in order (later stages win).
  std::vector<std::string> manifest_paths;
  std::string image_dir;
  // Fixed-transfer threshold; required for internal_test / external.
  std::optional<double> tau;
  // Severity threshold for fixed runs; defaults to tau.
  std::optional<double> severe_tau;
  // Rows evaluated by fixed runs; nullopt = every row in the table.
  std::optional<Split> split;
  PolicyConfig policy;
  BootstrapConfig bootstrap;
  bool stratify_regression = true;
  // Audit: hash preprocessed images (default) or the decoded originals.
  bool hash_preprocessed = true;
  int max_distance = 4;
  PreprocessConfig preprocess;
  unsigned threads = 0;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

// CI as reported: the percentile interval, widened to contain the point
// estimate when resampling skew leaves it outside.
struct ReportedInterval {
  ConfidenceInterval ci;
  bool extended_to_point = false;
};

struct ClassificationBlock {
  std::string positive_class;
  std::size_t n = 0;
  std::size_t positives = 0;
  double tau = 0.0;
  std::optional<PolicySelection> selection;  // develop runs only
  RocCurve roc;
  PrCurve pr;
  double brier = 0.0;
  ConfusionCounts counts;
  OperatingPointMetrics metrics;
  // Keyed by metric name: auroc, auprc, brier and each defined
  // operating-point metric.
  std::map<std::string, ReportedInterval> intervals;
};

struct TscoreBlock {
  RegressionMetrics metrics;
  std::optional<ConfidenceInterval> pearson_ci;  // Fisher z
  std::optional<BlandAltmanSummary> bland_altman;
  std::map<std::string, ReportedInterval> intervals;  // mae, rmse
  bool stratified = true;
};

struct AuditBlock {
  CompositionTable composition;
  std::vector<LeakagePair> leakage;
  std::vector<std::string> unreadable;  // "sample_id: reason"
  std::size_t hashed = 0;
  int max_distance = 4;
  bool hashed_preprocessed = true;
  std::size_t merge_collisions = 0;
};

struct EvaluationReport {
  RunMode mode = RunMode::kDevelop;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  double ci_level = 0.95;
  // (role, sha256 hex) for each input file.
  std::vector<std::pair<std::string, std::string>> input_digests;
  std::optional<ClassificationBlock> screening;
  std::optional<ClassificationBlock> severity;
  std::optional<TscoreBlock> tscore;
  std::optional<AuditBlock> audit;
  std::vector<std::string> warnings;

  // Deterministic JSON document (no timestamps).
  std::string to_json() const;
  int exit_code() const;
};

// Selects tau* on the validation rows and evaluates it there.
EvaluationReport run_develop(const RunConfig& config);
// Evaluates at the configured tau without any search.
EvaluationReport run_fixed(const RunConfig& config);
// Composition table plus cross-split perceptual-hash leakage.
EvaluationReport run_audit(const RunConfig& config);
// Dispatches on config.mode.
EvaluationReport run(const RunConfig& config);

// Screening / severity evaluation shared by the runners.
ClassificationBlock evaluate_classification(const LabeledScores& data, double tau,
                                            std::string positive_class,
                                            const BootstrapConfig& bootstrap);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace screenkit
