#include "screenkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "screenkit/error.hpp"

namespace screenkit {

std::size_t LabeledScores::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void LabeledScores::validate() const {
  if (labels.empty()) throw ValidationError("no samples");
  if (labels.size() != scores.size()) {
    throw ValidationError("labels and scores differ in length");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("label at index " + std::to_string(i) + " is not 0/1");
    }
    if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
      throw ValidationError("score at index " + std::to_string(i) +
                            " is not a probability");
    }
  }
}

void LabeledScores::validate_two_class() const {
  validate();
  const std::size_t p = positives();
  if (p == 0 || p == size()) {
    throw ValidationError("both label classes must be present");
  }
}

ConfusionCounts confusion_at(const LabeledScores& data, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must be in [0, 1]");
  ConfusionCounts c;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    const bool predicted = data.scores[i] >= tau;
    if (data.labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double youden_index(double sensitivity, double specificity) {
  return sensitivity + specificity - 1.0;
}

OperatingPointMetrics operating_point_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0) {
    throw ValidationError("confusion counts must be nonnegative");
  }
  if (c.total() < 1) throw ValidationError("confusion counts are all zero");
  OperatingPointMetrics m;
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.ppv = ratio(c.tp, c.tp + c.fp);
  m.npv = ratio(c.tn, c.tn + c.fn);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  if (m.sensitivity && m.specificity) {
    m.balanced_accuracy = (*m.sensitivity + *m.specificity) / 2.0;
    m.youden_j = youden_index(*m.sensitivity, *m.specificity);
  }
  if (m.ppv && m.sensitivity && (*m.ppv + *m.sensitivity) > 0.0) {
    m.f1 = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
  }
  const double prod = static_cast<double>(c.tp + c.fp) *
                      static_cast<double>(c.tp + c.fn) *
                      static_cast<double>(c.tn + c.fp) *
                      static_cast<double>(c.tn + c.fn);
  if (prod > 0.0) {
    m.mcc = (static_cast<double>(c.tp) * static_cast<double>(c.tn) -
             static_cast<double>(c.fp) * static_cast<double>(c.fn)) /
            std::sqrt(prod);
  }
  return m;
}

namespace {

// Tie groups in descending score order: (score, positives, negatives).
struct Group {
  double score;
  std::int64_t pos;
  std::int64_t neg;
};

std::vector<Group> descending_groups(const LabeledScores& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.scores[a] > data.scores[b];
  });
  std::vector<Group> groups;
  for (std::size_t idx : order) {
    const double s = data.scores[idx];
    if (groups.empty() || groups.back().score != s) groups.push_back({s, 0, 0});
    data.labels[idx] == 1 ? ++groups.back().pos : ++groups.back().neg;
  }
  return groups;
}

}  // namespace

RocCurve roc_curve(const LabeledScores& data) {
  data.validate();
  const auto p = static_cast<std::int64_t>(data.positives());
  const auto n = static_cast<std::int64_t>(data.size()) - p;
  if (p == 0 || n == 0) {
    throw CurveUndefinedError("ROC curve needs both classes");
  }
  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::int64_t tp = 0, fp = 0;
  // Twice the trapezoid area in units of 1 / (P * N).
  std::int64_t twice_area = 0;
  for (const Group& g : descending_groups(data)) {
    twice_area += g.neg * (2 * tp + g.pos);
    tp += g.pos;
    fp += g.neg;
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(p));
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n));
    curve.thresholds.push_back(g.score);
  }
  curve.auroc = static_cast<double>(twice_area) /
                (2.0 * static_cast<double>(p) * static_cast<double>(n));
  return curve;
}

double auroc(const LabeledScores& data) { return roc_curve(data).auroc; }

PrCurve pr_curve(const LabeledScores& data) {
  data.validate();
  const auto p = static_cast<std::int64_t>(data.positives());
  if (p == 0) throw CurveUndefinedError("PR curve needs at least one positive");
  PrCurve curve;
  curve.baseline = static_cast<double>(p) / static_cast<double>(data.size());
  curve.recall.push_back(0.0);
  curve.precision.push_back(1.0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::int64_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  double ap = 0.0;
  for (const Group& g : descending_groups(data)) {
    tp += g.pos;
    fp += g.neg;
    const double recall = static_cast<double>(tp) / static_cast<double>(p);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    curve.recall.push_back(recall);
    curve.precision.push_back(precision);
    curve.thresholds.push_back(g.score);
  }
  curve.auprc = ap;
  return curve;
}

double auprc(const LabeledScores& data) { return pr_curve(data).auprc; }

double brier(const LabeledScores& data) {
  data.validate();
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = data.scores[i] - data.labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(data.size());
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b,
                std::size_t min_n) {
  if (a.size() != b.size()) throw ValidationError("vectors differ in length");
  if (a.size() < min_n) {
    throw InsufficientDataError("need at least " + std::to_string(min_n) +
                                " paired values");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw ValidationError("non-finite value at index " + std::to_string(i));
    }
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  check_pair(x, y, 1);
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RegressionMetrics regression_metrics(std::span<const double> pred,
                                     std::span<const double> ref) {
  check_pair(pred, ref, 1);
  RegressionMetrics m;
  m.n = pred.size();
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - ref[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  m.mae = abs_sum / static_cast<double>(m.n);
  // Rounding can leave sqrt(mean square) an ulp below the mean absolute
  // error when all |d| are equal; the exact values satisfy rmse >= mae.
  m.rmse = std::max(m.mae, std::sqrt(sq_sum / static_cast<double>(m.n)));
  m.pearson_r = pearson(pred, ref);
  return m;
}

BlandAltmanSummary bland_altman(std::span<const double> pred,
                                std::span<const double> ref) {
  check_pair(pred, ref, 2);
  std::vector<double> diff(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) diff[i] = pred[i] - ref[i];
  BlandAltmanSummary s;
  s.n = diff.size();
  s.bias = mean(diff);
  double ss = 0.0;
  for (double d : diff) ss += (d - s.bias) * (d - s.bias);
  s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.loa_low = s.bias - 1.96 * s.sd;
  s.loa_high = s.bias + 1.96 * s.sd;
  return s;
}

}  // namespace screenkit
