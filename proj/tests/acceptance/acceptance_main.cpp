// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and time budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "screenkit/audit.hpp"
#include "screenkit/image.hpp"
#include "screenkit/image_io.hpp"
#include "screenkit/metrics.hpp"
#include "screenkit/special.hpp"
#include "screenkit/stats.hpp"
#include "screenkit/threshold.hpp"
#include "test_support.hpp"

namespace {

using namespace screenkit;
using screenkit::testing::Gen;
using screenkit::testing::ScratchDir;
using Clock = std::chrono::steady_clock;

constexpr double kThreeDecimals = 5e-4;   // values quoted to 3 decimals
constexpr double kAurocTol = 1e-12;
constexpr double kFisherTol = 1e-3;
constexpr double kStatTol = 1e-12;
constexpr double kChi2SfTol = 1e-4;
constexpr double kOracleAgreement = 1e-12;
constexpr double kConfusionBudgetMs = 1.0;
constexpr double kAurocBudgetS = 5.0;
constexpr double kPolicyBudgetS = 5.0;
constexpr double kBootstrapBudgetS = 30.0;
constexpr int kInstances = 1000;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

int g_failures = 0;

void report(const char* name, const Outcome& o) {
  std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  if (!o.pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool near(std::optional<double> v, double want, double tol) {
  return v && std::abs(*v - want) <= tol;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ------------------------------------------------------------------------

Outcome external_confusion() {
  Outcome o;
  const ConfusionCounts c{24, 3, 6, 9};
  const auto t0 = Clock::now();
  const OperatingPointMetrics m = operating_point_metrics(c);
  const double ms = seconds_since(t0) * 1e3;
  o.require(m.sensitivity && *m.sensitivity == 0.8, "sensitivity != 0.800");
  o.require(m.specificity && *m.specificity == 0.75, "specificity != 0.750");
  o.require(near(m.ppv, 0.889, kThreeDecimals), "ppv != 0.889");
  o.require(m.npv && *m.npv == 0.6, "npv != 0.600");
  o.require(near(m.accuracy, 0.786, kThreeDecimals), "accuracy != 0.786");
  o.require(ms < kConfusionBudgetMs, fmt("took %.3f ms", ms));
  if (o.pass) o.detail = fmt("sens/spec 0.800/0.750 in %.4f ms", ms);
  return o;
}

Outcome youden() {
  Outcome o;
  const double j = youden_index(0.862, 0.765);
  o.require(std::abs(j - 0.627) <= kOracleAgreement, fmt("J = %.15f", j));
  const auto m = operating_point_metrics({86, 0, 14, 0});
  o.require(!m.youden_j, "J defined without negatives");
  if (o.pass) o.detail = fmt("J = %.3f", j);
  return o;
}

Outcome cohort_audit() {
  Outcome o;
  const CompositionTable t = composition_table(screenkit::testing::cohort_manifest());
  o.require(t.split_total(Split::kTrain) == 1120, "train total");
  o.require(t.split_total(Split::kVal) == 226, "val total");
  o.require(t.split_total(Split::kTest) == 224, "test total");
  o.require(t.bone_loss(Split::kTest) == 136, "test bone loss");
  o.require(t.grand_total() == 1570, "grand total");
  const Split splits[] = {Split::kTrain, Split::kVal, Split::kTest};
  std::int64_t split_sum = 0;
  for (int s = 0; s < 3; ++s) {
    std::int64_t row = 0;
    for (int k = 0; k < kClassCount; ++k) {
      const std::int64_t v = t.count(splits[s], static_cast<ClassLabel>(k));
      o.require(v == screenkit::testing::kCohortCounts[s][k], "cell mismatch");
      row += v;
    }
    o.require(row == t.split_total(splits[s]), "row sum invariant");
    o.require(t.bone_loss(splits[s]) ==
                  t.split_total(splits[s]) - t.count(splits[s], ClassLabel::kNormal),
              "bone-loss invariant");
    split_sum += row;
  }
  std::int64_t class_sum = 0;
  for (int k = 0; k < kClassCount; ++k) class_sum += t.class_total(static_cast<ClassLabel>(k));
  o.require(split_sum == t.grand_total() && class_sum == t.grand_total(), "margin invariant");
  o.require(t.bone_loss_total() == t.grand_total() - t.class_total(ClassLabel::kNormal),
            "bone-loss total invariant");
  if (o.pass) o.detail = "train 1120 / val 226 / test 224, test BoneLoss 136";
  return o;
}

double mann_whitney_oracle(const LabeledScores& d) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.labels[i] != 1) continue;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d.labels[j] != 0) continue;
      pairs += 1.0;
      if (d.scores[i] > d.scores[j]) wins += 1.0;
      else if (d.scores[i] == d.scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

Outcome auroc_equivalence() {
  Outcome o;
  Gen gen(20240601);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int t = 0; t < kInstances; ++t) {
    const LabeledScores d = gen.two_class_scores(gen.uniform_int(2, 100), gen.coin(0.8));
    worst = std::max(worst, std::abs(auroc(d) - mann_whitney_oracle(d)));
  }
  const double s = seconds_since(t0);
  o.require(worst <= kAurocTol, fmt("max |diff| = %.3g", worst));
  o.require(s < kAurocBudgetS, fmt("took %.2f s", s));
  if (o.pass) o.detail = fmt("max |diff| %.1e, %.2f s", worst, s);
  return o;
}

// Exhaustive integer search over thresholds 20..80 cents.
struct PolicyOracle {
  int tau_cents;
  bool feasible;
};

PolicyOracle policy_oracle(const LabeledScores& d) {
  std::vector<int> cents(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) cents[i] = static_cast<int>(std::lround(d.scores[i] * 100));
  const std::int64_t pos = static_cast<std::int64_t>(d.positives());
  const std::int64_t neg = static_cast<std::int64_t>(d.size()) - pos;
  int best = -1;
  std::int64_t best_tn = -1, best_tp = -1;
  bool any_feasible = false;
  for (int k = 20; k <= 80; ++k) {
    std::int64_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] == 1 && cents[i] >= k) ++tp;
      if (d.labels[i] == 0 && cents[i] < k) ++tn;
    }
    const bool ok = tp * 100 >= 86 * pos;
    if (ok && !any_feasible) {
      any_feasible = true;
      best = -1;
    }
    if (any_feasible) {
      if (!ok) continue;
      // Same negative count for every k, so specificity orders like tn.
      if (best < 0 || tn > best_tn) {
        best = k;
        best_tn = tn;
      }
    } else if (best < 0 || tp > best_tp || (tp == best_tp && tn > best_tn)) {
      best = k;
      best_tp = tp;
      best_tn = tn;
    }
  }
  (void)neg;
  return {best, any_feasible};
}

Outcome threshold_policy() {
  Outcome o;
  Gen gen(777);
  const PolicyConfig config;
  int infeasible = 0;
  const auto t0 = Clock::now();
  for (int t = 0; t < kInstances; ++t) {
    const LabeledScores d = gen.lattice_scores(gen.uniform_int(2, 100));
    const PolicySelection got = select_threshold(d, config);
    const PolicyOracle want = policy_oracle(d);
    if (!want.feasible) ++infeasible;
    const int got_cents = static_cast<int>(std::lround(got.tau_star * 100));
    if (got.feasible != want.feasible || got_cents != want.tau_cents ||
        got.tau_star != want.tau_cents / 100.0) {
      o.require(false, "instance " + std::to_string(t) + ": got " + std::to_string(got_cents) +
                           " want " + std::to_string(want.tau_cents));
    }
  }
  const double s = seconds_since(t0);
  o.require(infeasible > 0, "generator produced no infeasible instance");
  o.require(s < kPolicyBudgetS, fmt("took %.2f s", s));
  if (o.pass) {
    o.detail = std::to_string(kInstances) + " exact (" + std::to_string(infeasible) +
               " infeasible), " + fmt("%.2f s", s);
  }
  return o;
}

Outcome fisher_z() {
  Outcome o;
  const ConfidenceInterval ci = fisher_z_ci(0.801, 31, 0.95);
  const boost::math::normal_distribution<double> n01;
  const double crit = boost::math::quantile(n01, 0.975);
  const double z = 0.5 * std::log((1 + 0.801) / (1 - 0.801));
  const double se = 1.0 / std::sqrt(28.0);
  const double lo = std::tanh(z - crit * se);
  const double hi = std::tanh(z + crit * se);
  o.require(std::abs(ci.low - 0.624) <= kFisherTol && std::abs(ci.high - 0.900) <= kFisherTol,
            fmt("CI (%.4f, %.4f)", ci.low, ci.high));
  o.require(std::abs(ci.low - lo) <= kOracleAgreement && std::abs(ci.high - hi) <= kOracleAgreement,
            "disagrees with oracle");
  if (o.pass) o.detail = fmt("CI (%.4f, %.4f)", ci.low, ci.high);
  return o;
}

Outcome hypothesis_tests() {
  Outcome o;
  const KruskalWallisResult kw = kruskal_wallis({{1, 2}, {3, 4}});
  const ChiSquareResult chi = chi_square_test({{10, 0}, {0, 10}});
  const double sf = chi2_sf(3.841459, 1);
  o.require(std::abs(kw.h - 2.4) <= kStatTol && kw.df == 1, fmt("H = %.15f", kw.h));
  o.require(std::abs(chi.chi2 - 20.0) <= kStatTol && chi.df == 1, fmt("chi2 = %.15f", chi.chi2));
  o.require(std::abs(sf - 0.05) <= kChi2SfTol, fmt("chi2_sf = %.8f", sf));
  if (o.pass) o.detail = fmt("H %.1f, chi2 %.0f", kw.h, chi.chi2) + fmt(", sf %.6f", sf);
  return o;
}

bool same_cis(const std::vector<ConfidenceInterval>& a, const std::vector<ConfidenceInterval>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].low != b[i].low || a[i].high != b[i].high || a[i].point != b[i].point ||
        a[i].undefined_replicates != b[i].undefined_replicates) {
      return false;
    }
  }
  return true;
}

Outcome bootstrap_determinism() {
  Outcome o;
  Gen gen(224);
  LabeledScores d;
  for (int i = 0; i < 224; ++i) {
    const int y = i < 136 ? 1 : 0;
    d.labels.push_back(y);
    d.scores.push_back(std::clamp(gen.uniform(0.0, 0.7) + 0.3 * y, 0.0, 1.0));
  }
  const std::vector<ScoreMetric> metrics = {named_metric("auroc", 0.44),
                                            named_metric("auprc", 0.44),
                                            named_metric("sensitivity", 0.44)};
  BootstrapConfig config;
  config.replicates = 2000;
  config.seed = 42;
  const auto t0 = Clock::now();
  config.threads = 1;
  const auto seq1 = stratified_bootstrap_cis(d, metrics, config);
  const auto seq2 = stratified_bootstrap_cis(d, metrics, config);
  config.threads = 4;
  const auto par = stratified_bootstrap_cis(d, metrics, config);
  const double s = seconds_since(t0);
  o.require(same_cis(seq1, seq2), "rerun differs");
  o.require(same_cis(seq1, par), "parallel run differs");
  config.seed = 43;
  config.threads = 1;
  o.require(!same_cis(seq1, stratified_bootstrap_cis(d, metrics, config)),
            "seed has no effect");
  o.require(s < kBootstrapBudgetS, fmt("took %.2f s", s));
  if (o.pass) {
    o.detail = fmt("AUROC [%.4f, %.4f]", seq1[0].low, seq1[0].high) + fmt(", %.2f s", s);
  }
  return o;
}

Outcome phash_invariance() {
  Outcome o;
  Gen gen(100);
  SplitManifest manifest;
  std::map<std::string, PhashDigest> digests;
  int worst = 0;
  for (int i = 0; i < 100; ++i) {
    GrayImage img(gen.uniform_int(40, 200), gen.uniform_int(40, 200));
    // Multiples of 5 up to 200 keep 1.2 v + 10 integral and below 255.
    const int cx = gen.uniform_int(0, img.width - 1);
    const int cy = gen.uniform_int(0, img.height - 1);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int base = std::abs(x - cx) + std::abs(y - cy) < img.width / 3 ? 25 : 0;
        img.at(x, y) = static_cast<std::uint8_t>(5 * std::min(40, base + gen.uniform_int(0, 15)));
      }
    }
    GrayImage mapped = img;
    for (auto& p : mapped.pixels) p = static_cast<std::uint8_t>(p + p / 5 + 10);
    const PhashDigest a = phash64(img);
    worst = std::max(worst, hamming(a, phash64(mapped)));

    SampleRecord r;
    r.sample_id = "img" + std::to_string(100 + i);
    r.image_path = r.sample_id + ".png";
    r.split = i % 2 ? Split::kTrain : Split::kVal;
    r.class_label = ClassLabel::kNormal;
    manifest.records.push_back(r);
    digests[r.sample_id] = a;
    if (i == 17) {
      SampleRecord dup = r;
      dup.sample_id = "planted";
      dup.image_path = "planted.png";
      dup.split = Split::kTest;
      manifest.records.push_back(dup);
      digests[dup.sample_id] = phash64(mapped);
    }
  }
  o.require(worst == 0, "max Hamming distance " + std::to_string(worst));
  const auto pairs = leakage_scan(manifest, digests, 0);
  const bool found = std::any_of(pairs.begin(), pairs.end(), [](const LeakagePair& p) {
    return p.distance == 0 && (p.id_a == "planted" || p.id_b == "planted") &&
           (p.id_a == "img117" || p.id_b == "img117");
  });
  o.require(found, "planted duplicate not reported");
  if (o.pass) o.detail = "100 images at distance 0, duplicate found";
  return o;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome preprocess_determinism() {
  Outcome o;
  Gen gen(50);
  std::vector<RawImage> corpus;
  for (int i = 0; i < 50; ++i) {
    const int w = gen.uniform_int(64, 320);
    const int h = gen.uniform_int(64, 320);
    GrayImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen.uniform_int(0, 40));
    // Blob side fractions span both sides of the 10% area cut.
    const int bw = std::max(1, static_cast<int>(w * gen.uniform(0.15, 0.9)));
    const int bh = std::max(1, static_cast<int>(h * gen.uniform(0.15, 0.9)));
    const int x0 = gen.uniform_int(0, w - bw);
    const int y0 = gen.uniform_int(0, h - bh);
    for (int y = y0; y < y0 + bh; ++y) {
      for (int x = x0; x < x0 + bw; ++x) img.at(x, y) = static_cast<std::uint8_t>(gen.uniform_int(150, 255));
    }
    corpus.push_back(to_raw(img));
  }

  const PreprocessConfig config;
  const auto a = preprocess_batch(corpus, config, 1);
  const auto b = preprocess_batch(corpus, config, 1);
  const auto c = preprocess_batch(corpus, config, 4);
  ScratchDir dir("acceptance");
  int fallbacks = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string pa = dir.file("a" + std::to_string(i) + ".png");
    const std::string pc = dir.file("c" + std::to_string(i) + ".png");
    write_png(pa, a[i].image);
    write_png(pc, c[i].image);
    o.require(a[i].image.width == 512 && a[i].image.height == 512, "output is not 512x512");
    o.require(a[i].image == b[i].image, "rerun differs at image " + std::to_string(i));
    o.require(read_bytes(pa) == read_bytes(pc), "thread count changes bytes at " + std::to_string(i));

    // Independent tight box of pixels strictly above the Otsu level.
    const GrayImage gray = to_grayscale(corpus[i]);
    int x0 = gray.width, y0 = gray.height, x1 = -1, y1 = -1;
    for (int y = 0; y < gray.height; ++y) {
      for (int x = 0; x < gray.width; ++x) {
        if (gray.at(x, y) > a[i].otsu.level) {
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
    }
    const std::int64_t area = x1 < 0 ? 0 : std::int64_t{x1 - x0 + 1} * (y1 - y0 + 1);
    const bool expect_fallback = area * 10 < std::int64_t{gray.width} * gray.height;
    o.require(a[i].crop.fallback == expect_fallback,
              "fallback mismatch at image " + std::to_string(i));
    fallbacks += a[i].crop.fallback;
  }
  o.require(fallbacks > 0 && fallbacks < 50, "corpus does not exercise both crop paths");
  if (o.pass) o.detail = "50 images, " + std::to_string(fallbacks) + " fallbacks";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"external confusion oracle", external_confusion},
      {"youden oracle", youden},
      {"cohort composition audit", cohort_audit},
      {"auroc pair-counting equivalence", auroc_equivalence},
      {"threshold-policy oracle", threshold_policy},
      {"fisher-z interval", fisher_z},
      {"kruskal-wallis / chi-square", hypothesis_tests},
      {"bootstrap determinism", bootstrap_determinism},
      {"phash affine invariance", phash_invariance},
      {"preprocessing determinism", preprocess_determinism},
  };
  for (const auto& [name, fn] : criteria) {
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, {false, std::string("threw: ") + e.what()});
    }
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), g_failures);
  return g_failures == 0 ? 0 : 1;
}
