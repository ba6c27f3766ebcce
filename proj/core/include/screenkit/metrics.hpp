#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace screenkit {

// Paired binary reference labels (0/1) and predicted probabilities.
struct LabeledScores {
  std::vector<int> labels;
  std::vector<double> scores;

  std::size_t size() const { return labels.size(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }

  // Non-empty, equal lengths, labels in {0, 1}, scores finite in [0, 1].
  void validate() const;
  // validate() plus both classes present.
  void validate_two_class() const;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Each field is nullopt when its denominator is zero.
struct OperatingPointMetrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> ppv;
  std::optional<double> npv;
  std::optional<double> accuracy;
  std::optional<double> balanced_accuracy;
  std::optional<double> f1;
  std::optional<double> youden_j;
  std::optional<double> mcc;

  friend bool operator==(const OperatingPointMetrics&,
                         const OperatingPointMetrics&) = default;
};

// A sample is predicted positive iff score >= tau.
ConfusionCounts confusion_at(const LabeledScores& data, double tau);

OperatingPointMetrics operating_point_metrics(const ConfusionCounts& c);

double youden_index(double sensitivity, double specificity);

struct RocCurve {
  // Anchored at (0, 0) and (1, 1); one interior point per distinct score.
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // score at each point; +inf at the origin
  double auroc = 0.0;
};

// Trapezoidal area, accumulated in integers so it equals the Mann-Whitney
// pair count (concordant + tied / 2) / (P * N) up to one final division.
// Throws CurveUndefinedError unless both classes are present.
RocCurve roc_curve(const LabeledScores& data);
double auroc(const LabeledScores& data);

struct PrCurve {
  // Starts at (recall 0, precision 1); then one point per distinct score.
  std::vector<double> recall;
  std::vector<double> precision;
  std::vector<double> thresholds;
  double auprc = 0.0;     // average precision
  double baseline = 0.0;  // prevalence
};

// Average precision: sum over tie-grouped descending cuts of
// (recall delta) * (precision at the cut). Throws CurveUndefinedError when
// there are no positives.
PrCurve pr_curve(const LabeledScores& data);
double auprc(const LabeledScores& data);

double brier(const LabeledScores& data);

struct RegressionMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> pearson_r;  // nullopt when either vector is constant
  std::size_t n = 0;
};

RegressionMetrics regression_metrics(std::span<const double> pred,
                                     std::span<const double> ref);
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);

struct BlandAltmanSummary {
  double bias = 0.0;  // mean of pred - ref
  double sd = 0.0;    // sample (n - 1) standard deviation of differences
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::size_t n = 0;
};

// Throws InsufficientDataError for n < 2.
BlandAltmanSummary bland_altman(std::span<const double> pred,
                                std::span<const double> ref);

}  // namespace screenkit
