#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "screenkit/metrics.hpp"

namespace screenkit {

enum class CiMethod { kPercentile };

struct BootstrapConfig {
  std::size_t replicates = 2000;
  std::uint64_t seed = 42;
  double ci_level = 0.95;
  CiMethod method = CiMethod::kPercentile;
  // Worker threads for replicate fan-out; 0 = SCREENKIT_THREADS / hardware.
  // Results do not depend on this value.
  unsigned threads = 1;

  void validate() const;
};

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  double point = 0.0;
  std::size_t undefined_replicates = 0;
};

// Metric over a resampled index multiset; nullopt marks an undefined value.
using MultiIndexMetric = std::function<void(std::span<const std::size_t> indices,
                                            std::span<std::optional<double>> out)>;

// Generic stratified percentile bootstrap. Each replicate resamples with
// replacement inside every stratum (distinct values of `strata`), keeping
// stratum sizes. Replicate r uses the generator seeded with
// derive_seed(config.seed, r). Point estimates use the identity index set.
// Throws InferenceError if a metric is undefined on the original data or on
// every replicate.
std::vector<ConfidenceInterval> bootstrap_ci(std::span<const int> strata,
                                             std::size_t metric_count,
                                             const MultiIndexMetric& metric,
                                             const BootstrapConfig& config);

using ScoreMetric = std::function<std::optional<double>(const LabeledScores&)>;

// Stratified by label; both classes must be present.
ConfidenceInterval stratified_bootstrap_ci(const LabeledScores& data,
                                           const ScoreMetric& metric,
                                           const BootstrapConfig& config);
std::vector<ConfidenceInterval> stratified_bootstrap_cis(
    const LabeledScores& data, std::span<const ScoreMetric> metrics,
    const BootstrapConfig& config);

using PairedMetric = std::function<std::optional<double>(
    std::span<const double> pred, std::span<const double> ref)>;

// Paired-vector bootstrap. With empty `strata` every pair forms one stratum
// (unstratified resampling).
std::vector<ConfidenceInterval> paired_bootstrap_cis(
    std::span<const double> pred, std::span<const double> ref,
    std::span<const int> strata, std::span<const PairedMetric> metrics,
    const BootstrapConfig& config);

// Names accepted by named_metric: auroc, auprc, brier, prevalence,
// mean_score, and the operating-point fields sensitivity, specificity, ppv,
// npv, accuracy, balanced_accuracy, f1, youden_j, mcc (evaluated at tau).
ScoreMetric named_metric(std::string_view name, double tau);
const std::vector<std::string>& operating_point_metric_names();
std::optional<double> field(const OperatingPointMetrics& m, std::string_view name);

// Linear interpolation between order statistics of sorted data, q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

// tanh(atanh(r) +- z_crit / sqrt(n - 3)). Throws DegenerateInputError for
// |r| >= 1 or n < 4.
ConfidenceInterval fisher_z_ci(double r, std::size_t n, double ci_level = 0.95);

struct KruskalWallisResult {
  double h = 0.0;
  double p_value = 1.0;
  int df = 0;
};

// Midrank H statistic with tie correction; chi-square approximation with
// k - 1 degrees of freedom. All-identical data gives H = 0, p = 1.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct ChiSquareResult {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// Pearson chi-square test of independence, no continuity correction. Every
// row and column sum must be positive.
ChiSquareResult chi_square_test(const std::vector<std::vector<std::int64_t>>& table);

}  // namespace screenkit
