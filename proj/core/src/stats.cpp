#include "screenkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "screenkit/error.hpp"
#include "screenkit/parallel.hpp"
#include "screenkit/rng.hpp"
#include "screenkit/special.hpp"

namespace screenkit {

void BootstrapConfig::validate() const {
  if (replicates < 1) throw ValidationError("bootstrap needs at least one replicate");
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw ValidationError("ci_level must be in (0, 1)");
  }
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InferenceError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<ConfidenceInterval> bootstrap_ci(std::span<const int> strata,
                                             std::size_t metric_count,
                                             const MultiIndexMetric& metric,
                                             const BootstrapConfig& config) {
  config.validate();
  if (strata.empty()) throw ValidationError("bootstrap over an empty sample");

  // Members of each stratum, strata ordered by value.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);

  std::vector<std::size_t> identity(strata.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  std::vector<std::optional<double>> point(metric_count);
  metric(identity, point);

  const std::size_t reps = config.replicates;
  std::vector<std::optional<double>> values(reps * metric_count);
  parallel_for(reps, resolve_thread_count(config.threads), [&](std::size_t r) {
    Rng rng(derive_seed(config.seed, r));
    std::vector<std::size_t> idx;
    idx.reserve(strata.size());
    for (const auto& [key, members] : groups) {
      for (std::size_t j = 0; j < members.size(); ++j) {
        idx.push_back(members[rng.uniform_index(members.size())]);
      }
    }
    metric(idx, std::span(values).subspan(r * metric_count, metric_count));
  });

  const double q_lo = (1.0 - config.ci_level) / 2.0;
  const double q_hi = (1.0 + config.ci_level) / 2.0;
  std::vector<ConfidenceInterval> out(metric_count);
  std::vector<double> defined;
  defined.reserve(reps);
  for (std::size_t k = 0; k < metric_count; ++k) {
    if (!point[k] || !std::isfinite(*point[k])) {
      throw InferenceError("metric " + std::to_string(k) +
                           " is undefined on the original sample");
    }
    defined.clear();
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& v = values[r * metric_count + k];
      if (v && std::isfinite(*v)) defined.push_back(*v);
    }
    if (defined.empty()) {
      throw InferenceError("metric " + std::to_string(k) +
                           " is undefined on every bootstrap replicate");
    }
    std::sort(defined.begin(), defined.end());
    out[k].point = *point[k];
    out[k].low = sorted_quantile(defined, q_lo);
    out[k].high = sorted_quantile(defined, q_hi);
    out[k].undefined_replicates = reps - defined.size();
  }
  return out;
}

std::vector<ConfidenceInterval> stratified_bootstrap_cis(
    const LabeledScores& data, std::span<const ScoreMetric> metrics,
    const BootstrapConfig& config) {
  data.validate_two_class();
  auto eval = [&](std::span<const std::size_t> idx,
                  std::span<std::optional<double>> out) {
    LabeledScores sample;
    sample.labels.reserve(idx.size());
    sample.scores.reserve(idx.size());
    for (std::size_t i : idx) {
      sample.labels.push_back(data.labels[i]);
      sample.scores.push_back(data.scores[i]);
    }
    for (std::size_t k = 0; k < metrics.size(); ++k) out[k] = metrics[k](sample);
  };
  return bootstrap_ci(data.labels, metrics.size(), eval, config);
}

ConfidenceInterval stratified_bootstrap_ci(const LabeledScores& data,
                                           const ScoreMetric& metric,
                                           const BootstrapConfig& config) {
  return stratified_bootstrap_cis(data, std::span(&metric, 1), config).front();
}

std::vector<ConfidenceInterval> paired_bootstrap_cis(
    std::span<const double> pred, std::span<const double> ref,
    std::span<const int> strata, std::span<const PairedMetric> metrics,
    const BootstrapConfig& config) {
  if (pred.size() != ref.size()) throw ValidationError("vectors differ in length");
  if (!strata.empty() && strata.size() != pred.size()) {
    throw ValidationError("strata length does not match the paired vectors");
  }
  const std::vector<int> single(pred.size(), 0);
  const std::span<const int> groups = strata.empty() ? std::span<const int>(single) : strata;
  auto eval = [&](std::span<const std::size_t> idx,
                  std::span<std::optional<double>> out) {
    std::vector<double> p, r;
    p.reserve(idx.size());
    r.reserve(idx.size());
    for (std::size_t i : idx) {
      p.push_back(pred[i]);
      r.push_back(ref[i]);
    }
    for (std::size_t k = 0; k < metrics.size(); ++k) out[k] = metrics[k](p, r);
  };
  return bootstrap_ci(groups, metrics.size(), eval, config);
}

const std::vector<std::string>& operating_point_metric_names() {
  static const std::vector<std::string> names = {
      "sensitivity", "specificity", "ppv",      "npv", "accuracy",
      "balanced_accuracy", "f1",   "youden_j", "mcc"};
  return names;
}

std::optional<double> field(const OperatingPointMetrics& m, std::string_view name) {
  if (name == "sensitivity") return m.sensitivity;
  if (name == "specificity") return m.specificity;
  if (name == "ppv") return m.ppv;
  if (name == "npv") return m.npv;
  if (name == "accuracy") return m.accuracy;
  if (name == "balanced_accuracy") return m.balanced_accuracy;
  if (name == "f1") return m.f1;
  if (name == "youden_j") return m.youden_j;
  if (name == "mcc") return m.mcc;
  throw ValidationError("unknown operating-point metric '" + std::string(name) + "'");
}

ScoreMetric named_metric(std::string_view name, double tau) {
  if (name == "auroc") {
    return [](const LabeledScores& d) -> std::optional<double> {
      if (d.positives() == 0 || d.negatives() == 0) return std::nullopt;
      return auroc(d);
    };
  }
  if (name == "auprc") {
    return [](const LabeledScores& d) -> std::optional<double> {
      if (d.positives() == 0) return std::nullopt;
      return auprc(d);
    };
  }
  if (name == "brier") {
    return [](const LabeledScores& d) -> std::optional<double> { return brier(d); };
  }
  if (name == "prevalence") {
    return [](const LabeledScores& d) -> std::optional<double> {
      return static_cast<double>(d.positives()) / static_cast<double>(d.size());
    };
  }
  if (name == "mean_score") {
    return [](const LabeledScores& d) -> std::optional<double> {
      return std::accumulate(d.scores.begin(), d.scores.end(), 0.0) /
             static_cast<double>(d.size());
    };
  }
  const auto& names = operating_point_metric_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ValidationError("unknown metric '" + std::string(name) + "'");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must be in [0, 1]");
  return [key = std::string(name), tau](const LabeledScores& d) {
    return field(operating_point_metrics(confusion_at(d, tau)), key);
  };
}

ConfidenceInterval fisher_z_ci(double r, std::size_t n, double ci_level) {
  if (!std::isfinite(r) || std::abs(r) >= 1.0) {
    throw DegenerateInputError("Fisher z interval needs |r| < 1");
  }
  if (n < 4) throw DegenerateInputError("Fisher z interval needs n >= 4");
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw ValidationError("ci_level must be in (0, 1)");
  }
  const double z = std::atanh(r);
  const double se = 1.0 / std::sqrt(static_cast<double>(n) - 3.0);
  const double crit = normal_quantile((1.0 + ci_level) / 2.0);
  return {std::tanh(z - crit * se), std::tanh(z + crit * se), r, 0};
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ValidationError("Kruskal-Wallis needs at least 2 groups");
  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ValidationError("Kruskal-Wallis group is empty");
    for (double v : groups[g]) {
      if (!std::isfinite(v)) throw ValidationError("non-finite observation");
      pooled.push_back({v, g});
    }
  }
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) throw ValidationError("Kruskal-Wallis needs n >= 3");
  std::sort(pooled.begin(), pooled.end(),
            [](const Obs& a, const Obs& b) { return a.value < b.value; });

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].group] += midrank;
    tie_term += t * t * t - t;
    i = j;
  }

  KruskalWallisResult result;
  result.df = static_cast<int>(groups.size()) - 1;
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) return {0.0, 1.0, result.df};
  double s = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    s += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  const double h = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
  result.h = std::max(0.0, h / correction);
  result.p_value = chi2_sf(result.h, result.df);
  return result;
}

ChiSquareResult chi_square_test(const std::vector<std::vector<std::int64_t>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw ValidationError("chi-square table needs at least 2 rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw ValidationError("chi-square table needs at least 2 columns");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) throw ValidationError("chi-square table is ragged");
    for (std::size_t j = 0; j < cols; ++j) {
      if (table[i][j] < 0) throw ValidationError("negative count in chi-square table");
      const auto v = static_cast<double>(table[i][j]);
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  for (double s : row_sum) {
    if (s <= 0.0) throw ValidationError("chi-square table has an empty row");
  }
  for (double s : col_sum) {
    if (s <= 0.0) throw ValidationError("chi-square table has an empty column");
  }
  ChiSquareResult result;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double d = static_cast<double>(table[i][j]) - expected;
      result.chi2 += d * d / expected;
    }
  }
  result.df = static_cast<int>((rows - 1) * (cols - 1));
  result.p_value = chi2_sf(result.chi2, result.df);
  return result;
}

}  // namespace screenkit
