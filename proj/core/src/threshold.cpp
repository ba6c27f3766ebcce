#include "screenkit/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

namespace screenkit {

namespace {

double quantize(double v) { return std::round(v * 100.0) / 100.0; }

// Counts of positives / negatives scoring >= tau via sorted score lists.
class ThresholdCounter {
 public:
  explicit ThresholdCounter(const LabeledScores& data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      (data.labels[i] == 1 ? pos_ : neg_).push_back(data.scores[i]);
    }
    std::sort(pos_.begin(), pos_.end());
    std::sort(neg_.begin(), neg_.end());
  }

  ConfusionCounts at(double tau) const {
    const auto above = [tau](const std::vector<double>& v) {
      return static_cast<std::int64_t>(
          v.end() - std::lower_bound(v.begin(), v.end(), tau));
    };
    ConfusionCounts c;
    c.tp = above(pos_);
    c.fp = above(neg_);
    c.fn = static_cast<std::int64_t>(pos_.size()) - c.tp;
    c.tn = static_cast<std::int64_t>(neg_.size()) - c.fp;
    return c;
  }

 private:
  std::vector<double> pos_;
  std::vector<double> neg_;
};

double sensitivity(const ConfusionCounts& c) {
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

}  // namespace

void ThresholdGrid::validate() const {
  if (!(start >= 0.0 && start < end && end <= 1.0)) {
    throw ValidationError("threshold grid must satisfy 0 <= start < end <= 1");
  }
  if (!(step >= 0.01 - 1e-12)) {
    throw ValidationError("threshold grid step must be at least 0.01");
  }
}

std::vector<double> ThresholdGrid::values() const {
  validate();
  const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  for (long k = 0; k <= count; ++k) {
    const double v = quantize(start + static_cast<double>(k) * step);
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

ThresholdGrid ThresholdGrid::parse(std::string_view text) {
  const auto first = text.find(':');
  const auto second =
      first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw ValidationError("grid must be start:end:step, got '" +
                          std::string(text) + "'");
  }
  ThresholdGrid grid;
  try {
    grid.start = csv::parse_optional_double(text.substr(0, first)).value();
    grid.end = csv::parse_optional_double(text.substr(first + 1, second - first - 1)).value();
    grid.step = csv::parse_optional_double(text.substr(second + 1)).value();
  } catch (const std::exception&) {
    throw ValidationError("grid must be start:end:step, got '" +
                          std::string(text) + "'");
  }
  grid.validate();
  return grid;
}

void PolicyConfig::validate() const {
  if (!(sensitivity_floor > 0.0 && sensitivity_floor <= 1.0)) {
    throw ValidationError("sensitivity floor must be in (0, 1]");
  }
  grid.validate();
}

std::vector<double> feasible_set(const LabeledScores& data,
                                 const PolicyConfig& config) {
  config.validate();
  data.validate_two_class();
  const ThresholdCounter counter(data);
  std::vector<double> out;
  for (double tau : config.grid.values()) {
    if (sensitivity(counter.at(tau)) >= config.sensitivity_floor) out.push_back(tau);
  }
  return out;
}

PolicySelection select_threshold(const LabeledScores& data,
                                 const PolicyConfig& config) {
  config.validate();
  data.validate_two_class();
  const ThresholdCounter counter(data);

  PolicySelection sel;
  bool have_feasible = false;
  ConfusionCounts best_feasible;
  double best_feasible_tau = 0.0;
  bool have_fallback = false;
  ConfusionCounts best_fallback;
  double best_fallback_tau = 0.0;

  // Grid values ascend, so strict improvement keeps the smallest tau on ties.
  for (double tau : config.grid.values()) {
    const ConfusionCounts c = counter.at(tau);
    if (sensitivity(c) >= config.sensitivity_floor) {
      ++sel.feasible_set_size;
      if (!have_feasible || c.tn > best_feasible.tn) {
        have_feasible = true;
        best_feasible = c;
        best_feasible_tau = tau;
      }
    }
    if (!have_fallback || c.tp > best_fallback.tp ||
        (c.tp == best_fallback.tp && c.tn > best_fallback.tn)) {
      have_fallback = true;
      best_fallback = c;
      best_fallback_tau = tau;
    }
  }

  sel.feasible = have_feasible;
  sel.tau_star = have_feasible ? best_feasible_tau : best_fallback_tau;
  sel.counts_at_tau = have_feasible ? best_feasible : best_fallback;
  sel.metrics_at_tau = operating_point_metrics(sel.counts_at_tau);
  return sel;
}

FixedEvaluation evaluate_at_fixed(const LabeledScores& data, double tau) {
  data.validate();
  FixedEvaluation out;
  out.tau = tau;
  out.counts = confusion_at(data, tau);
  out.metrics = operating_point_metrics(out.counts);
  return out;
}

}  // namespace screenkit
