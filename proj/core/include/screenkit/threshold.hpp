#pragma once

#include <string_view>
#include <vector>

#include "screenkit/metrics.hpp"

namespace screenkit {

// Threshold shipped for fixed-transfer evaluation.
inline constexpr double kDefaultTau = 0.44;

// Inclusive grid start, start + step, ..., end. Every value is quantized to
// two decimals so grid points compare equal to their decimal spelling.
struct ThresholdGrid {
  double start = 0.20;
  double end = 0.80;
  double step = 0.01;

  void validate() const;
  std::vector<double> values() const;

  // "start:end:step", e.g. "0.20:0.80:0.01".
  static ThresholdGrid parse(std::string_view text);
};

struct PolicyConfig {
  double sensitivity_floor = 0.86;
  ThresholdGrid grid;

  void validate() const;
};

struct PolicySelection {
  double tau_star = 0.0;
  bool feasible = false;
  ConfusionCounts counts_at_tau;
  OperatingPointMetrics metrics_at_tau;
  std::size_t feasible_set_size = 0;
};

// Grid thresholds whose sensitivity meets the floor, ascending.
std::vector<double> feasible_set(const LabeledScores& data,
                                 const PolicyConfig& config);

// Maximizes specificity over the feasible set, smallest tau on ties. When no
// grid point is feasible, returns feasible = false and the tau maximizing
// sensitivity, then specificity, then the smallest tau.
PolicySelection select_threshold(const LabeledScores& data,
                                 const PolicyConfig& config);

struct FixedEvaluation {
  double tau = 0.0;
  ConfusionCounts counts;
  OperatingPointMetrics metrics;
};

// Fixed-threshold transfer: no search, tau is used verbatim.
FixedEvaluation evaluate_at_fixed(const LabeledScores& data, double tau);

}  // namespace screenkit
