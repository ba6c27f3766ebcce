#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "screenkit/error.hpp"
#include "screenkit/image_io.hpp"
#include "screenkit/report.hpp"
#include "test_support.hpp"

namespace screenkit {
namespace {

using nlohmann::json;
using testing::Gen;
using testing::ScratchDir;

const std::string kExternal = SCREENKIT_FIXTURE_DIR "/external_scores.csv";
const std::string kDevelop = SCREENKIT_FIXTURE_DIR "/develop_scores.csv";

RunConfig fixed_config(const std::string& path, double tau, std::size_t reps = 300) {
  RunConfig c;
  c.mode = RunMode::kExternal;
  c.score_path = path;
  c.tau = tau;
  c.bootstrap.replicates = reps;
  return c;
}

RunConfig develop_config(const std::string& path, std::size_t reps = 300) {
  RunConfig c;
  c.mode = RunMode::kDevelop;
  c.score_path = path;
  c.bootstrap.replicates = reps;
  return c;
}

std::string table_text(const ScoreTable& t) {
  std::ostringstream out;
  write_score_table(out, t);
  return out.str();
}

ScoreRow row(std::string id, Split split, ClassLabel label, double p,
             std::optional<double> severe = std::nullopt) {
  ScoreRow r;
  r.sample_id = std::move(id);
  r.split = split;
  r.label_class = label;
  r.screen_prob = p;
  r.severe_prob = severe;
  return r;
}

// Every interval object in the document brackets its point estimate.
void expect_intervals_bracket(const json& block) {
  for (const auto& [name, ci] : block.at("intervals").items()) {
    EXPECT_LE(ci.at("low").get<double>(), ci.at("point").get<double>()) << name;
    EXPECT_GE(ci.at("high").get<double>(), ci.at("point").get<double>()) << name;
  }
}

// ---------------------------------------------------------------- config

TEST(RunConfig, Validation) {
  RunConfig c;
  c.mode = RunMode::kExternal;
  c.score_path = "x.csv";
  EXPECT_THROW(c.validate(), ConfigError);  // tau missing
  c.tau = 1.2;
  EXPECT_THROW(c.validate(), ConfigError);
  c.tau = 0.44;
  EXPECT_NO_THROW(c.validate());
  c.bootstrap.ci_level = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);

  RunConfig audit;
  audit.mode = RunMode::kAudit;
  EXPECT_THROW(audit.validate(), ConfigError);
  EXPECT_EQ(parse_run_mode("internal-test"), RunMode::kInternalTest);
  EXPECT_THROW(parse_run_mode("deploy"), ConfigError);
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// ------------------------------------------------------------- run_fixed

TEST(RunFixed, ExternalFixtureOperatingPoint) {
  const EvaluationReport r = run_fixed(fixed_config(kExternal, 0.44));
  ASSERT_TRUE(r.screening);
  EXPECT_EQ(r.screening->counts, (ConfusionCounts{24, 3, 6, 9}));
  EXPECT_DOUBLE_EQ(*r.screening->metrics.sensitivity, 0.8);
  EXPECT_DOUBLE_EQ(*r.screening->metrics.specificity, 0.75);
  EXPECT_EQ(r.screening->tau, 0.44);
  EXPECT_FALSE(r.screening->selection.has_value());
  EXPECT_EQ(r.exit_code(), kExitClean);
  ASSERT_EQ(r.input_digests.size(), 1u);
  EXPECT_EQ(r.input_digests[0].second, file_sha256(kExternal));
}

TEST(RunFixed, SeverityUsesOnlyBoneLossRows) {
  const EvaluationReport r = run_fixed(fixed_config(kExternal, 0.44));
  ASSERT_TRUE(r.severity);
  EXPECT_EQ(r.severity->positive_class, "Osteoporosis");
  EXPECT_EQ(r.severity->n, 30u);
  EXPECT_EQ(r.severity->positives, 13u);
}

TEST(RunFixed, SevereTauOverride) {
  RunConfig c = fixed_config(kExternal, 0.44);
  c.severe_tau = 0.6;
  const EvaluationReport r = run_fixed(c);
  EXPECT_EQ(r.severity->tau, 0.6);
  EXPECT_EQ(r.screening->tau, 0.44);
}

TEST(RunFixed, NoSevereColumnValuesMeansNoBlock) {
  ScratchDir dir("report");
  ScoreTable t;
  for (int i = 0; i < 10; ++i) {
    t.rows.push_back(row("n" + std::to_string(i), Split::kTest, ClassLabel::kNormal, 0.05 * i));
    t.rows.push_back(row("b" + std::to_string(i), Split::kTest, ClassLabel::kOsteopenia, 0.5 + 0.05 * i));
  }
  const std::string path = dir.write("s.csv", table_text(t));
  const EvaluationReport r = run_fixed(fixed_config(path, 0.44));
  EXPECT_FALSE(r.severity.has_value());
  EXPECT_FALSE(r.tscore.has_value());
  EXPECT_EQ(r.exit_code(), kExitClean);
  const json doc = json::parse(r.to_json());
  EXPECT_FALSE(doc.contains("severity"));
  EXPECT_FALSE(doc.contains("tscore"));
}

TEST(RunFixed, EqualTscoresGivePerfectAgreement) {
  ScratchDir dir("report");
  ScoreTable t;
  for (int i = 0; i < 8; ++i) {
    ScoreRow r = row("r" + std::to_string(i), Split::kTest,
                     i % 2 ? ClassLabel::kOsteopenia : ClassLabel::kNormal, 0.1 * (i + 1));
    r.tscore_pred = r.tscore_ref = -0.4 * i;
    t.rows.push_back(r);
  }
  const EvaluationReport r = run_fixed(fixed_config(dir.write("s.csv", table_text(t)), 0.44));
  ASSERT_TRUE(r.tscore);
  EXPECT_EQ(r.tscore->metrics.mae, 0.0);
  EXPECT_DOUBLE_EQ(*r.tscore->metrics.pearson_r, 1.0);
  EXPECT_EQ(r.tscore->bland_altman->bias, 0.0);
}

TEST(RunFixed, TscoreBlockOnFixture) {
  RunConfig c = fixed_config(kExternal, 0.44);
  const EvaluationReport strat = run_fixed(c);
  ASSERT_TRUE(strat.tscore);
  EXPECT_EQ(strat.tscore->metrics.n, 42u);
  ASSERT_TRUE(strat.tscore->pearson_ci);
  EXPECT_LT(strat.tscore->pearson_ci->low, *strat.tscore->metrics.pearson_r);
  EXPECT_TRUE(strat.tscore->stratified);
  c.stratify_regression = false;
  const EvaluationReport flat = run_fixed(c);
  EXPECT_FALSE(flat.tscore->stratified);
  EXPECT_EQ(flat.tscore->metrics.mae, strat.tscore->metrics.mae);
}

TEST(RunFixed, SplitFilter) {
  RunConfig c = fixed_config(kDevelop, 0.44);
  c.split = Split::kTest;
  EXPECT_EQ(run_fixed(c).screening->n, 60u);
  c.split.reset();
  EXPECT_EQ(run_fixed(c).screening->n, 120u);
  c.split = Split::kExternal;
  EXPECT_THROW(run_fixed(c), ValidationError);
}

TEST(RunFixed, DeterministicJson) {
  const std::string a = run_fixed(fixed_config(kExternal, 0.44)).to_json();
  const std::string b = run_fixed(fixed_config(kExternal, 0.44)).to_json();
  EXPECT_EQ(a, b);
  RunConfig threaded = fixed_config(kExternal, 0.44);
  threaded.bootstrap.threads = 4;
  EXPECT_EQ(run_fixed(threaded).to_json(), a);
}

TEST(RunFixed, JsonShape) {
  const json doc = json::parse(run_fixed(fixed_config(kExternal, 0.44)).to_json());
  EXPECT_EQ(doc.at("schema"), "screenkit.report/1");
  EXPECT_EQ(doc.at("run").at("mode"), "external");
  EXPECT_EQ(doc.at("run").at("seed"), 42);
  EXPECT_EQ(doc.at("screening").at("tau").get<double>(), 0.44);
  EXPECT_EQ(doc.at("screening").at("confusion").at("tp"), 24);
  EXPECT_EQ(doc.at("screening").at("roc_curve").at("fpr").front(), 0.0);
  EXPECT_TRUE(doc.at("screening").at("roc_curve").at("threshold").front().is_null());
  expect_intervals_bracket(doc.at("screening"));
  expect_intervals_bracket(doc.at("severity"));
  expect_intervals_bracket(doc.at("tscore"));
  for (const auto& name : {"auroc", "auprc", "brier", "sensitivity", "specificity", "ppv", "npv"}) {
    EXPECT_TRUE(doc.at("screening").at("intervals").contains(name)) << name;
  }
}

TEST(RunFixed, UndefinedMetricsAreNullNotZero) {
  ScratchDir dir("report");
  ScoreTable t;
  // Every score below tau: PPV has a zero denominator.
  t.rows.push_back(row("a", Split::kTest, ClassLabel::kNormal, 0.1));
  t.rows.push_back(row("b", Split::kTest, ClassLabel::kOsteopenia, 0.2));
  t.rows.push_back(row("c", Split::kTest, ClassLabel::kNormal, 0.15));
  const EvaluationReport r = run_fixed(fixed_config(dir.write("s.csv", table_text(t)), 0.9));
  EXPECT_FALSE(r.screening->metrics.ppv.has_value());
  const json doc = json::parse(r.to_json());
  EXPECT_TRUE(doc.at("screening").at("operating_point").at("ppv").is_null());
  EXPECT_FALSE(doc.at("screening").at("intervals").contains("ppv"));
}

// ----------------------------------------------------------- run_develop

TEST(RunDevelop, SeparableValidationPicksSmallestTau) {
  ScratchDir dir("report");
  ScoreTable t;
  for (int i = 0; i < 6; ++i) {
    t.rows.push_back(row("n" + std::to_string(i), Split::kVal, ClassLabel::kNormal, 0.1));
    t.rows.push_back(row("p" + std::to_string(i), Split::kVal, ClassLabel::kOsteoporosis, 0.9, 0.8));
    t.rows.push_back(row("q" + std::to_string(i), Split::kVal, ClassLabel::kOsteopenia, 0.9, 0.2));
  }
  t.rows.push_back(row("t0", Split::kTest, ClassLabel::kNormal, 0.95));  // ignored
  const EvaluationReport r = run_develop(develop_config(dir.write("s.csv", table_text(t))));
  ASSERT_TRUE(r.screening->selection);
  EXPECT_TRUE(r.screening->selection->feasible);
  EXPECT_EQ(r.screening->selection->tau_star, 0.20);
  EXPECT_EQ(r.screening->tau, 0.20);
  EXPECT_EQ(r.screening->n, 18u);
  ASSERT_TRUE(r.severity);
  EXPECT_EQ(r.severity->selection->tau_star, 0.21);
}

TEST(RunDevelop, SingleClassValidationIsInputError) {
  ScratchDir dir("report");
  ScoreTable t;
  t.rows.push_back(row("a", Split::kVal, ClassLabel::kNormal, 0.1));
  t.rows.push_back(row("b", Split::kVal, ClassLabel::kNormal, 0.3));
  EXPECT_THROW(run_develop(develop_config(dir.write("s.csv", table_text(t)))), ValidationError);
  EXPECT_THROW(run_develop(develop_config(kExternal)), ValidationError);  // no val rows
}

TEST(RunDevelop, FixtureSelectionAndDeterminism) {
  const EvaluationReport r = run_develop(develop_config(kDevelop));
  ASSERT_TRUE(r.screening->selection);
  const double tau = r.screening->selection->tau_star;
  EXPECT_GE(tau, 0.20);
  EXPECT_LE(tau, 0.80);
  EXPECT_EQ(r.to_json(), run_develop(develop_config(kDevelop)).to_json());

  // The selected tau transfers to a fixed run on the same rows unchanged.
  RunConfig fixed = fixed_config(kDevelop, tau);
  fixed.split = Split::kVal;
  const EvaluationReport f = run_fixed(fixed);
  EXPECT_EQ(f.screening->counts, r.screening->selection->counts_at_tau);
}

// ------------------------------------------------------------- run_audit

struct AuditFixture {
  ScratchDir dir{"audit"};
  std::string manifest;

  explicit AuditFixture(bool plant_duplicate, bool add_missing = false) {
    Gen gen(71);
    std::filesystem::create_directories(dir.path() / "img");
    std::ostringstream m;
    m << kManifestHeader << '\n';
    const char* splits[] = {"train", "val", "test"};
    GrayImage first;
    for (int i = 0; i < 9; ++i) {
      const GrayImage img = gen.blob_image(64, 48);
      if (i == 0) first = img;
      const std::string name = "img/i" + std::to_string(i) + ".png";
      write_png(dir.file(name), img);
      m << "s" << i << ',' << name << ',' << splits[i % 3] << ',' << i % 3 << ",,,,,stage1\n";
    }
    if (plant_duplicate) {
      write_png(dir.file("img/dup.png"), first);
      m << "dup,img/dup.png,test,1,,,,,stage2\n";
    }
    if (add_missing) m << "gone,img/gone.png,val,0,,,,,stage1\n";
    manifest = dir.write("manifest.csv", m.str());
  }

  RunConfig config() const {
    RunConfig c;
    c.mode = RunMode::kAudit;
    c.manifest_paths = {manifest};
    c.image_dir = dir.path().string();
    return c;
  }
};

TEST(RunAudit, CleanManifest) {
  AuditFixture fx(false);
  const EvaluationReport r = run_audit(fx.config());
  ASSERT_TRUE(r.audit);
  EXPECT_TRUE(r.audit->leakage.empty());
  EXPECT_EQ(r.audit->hashed, 9u);
  EXPECT_EQ(r.exit_code(), kExitClean);
  EXPECT_EQ(r.audit->composition.grand_total(), 9);
}

TEST(RunAudit, PlantedDuplicateIsReported) {
  AuditFixture fx(true);
  const EvaluationReport r = run_audit(fx.config());
  ASSERT_EQ(r.audit->leakage.size(), 1u);
  EXPECT_EQ(r.audit->leakage[0].id_a, "dup");
  EXPECT_EQ(r.audit->leakage[0].id_b, "s0");
  EXPECT_EQ(r.audit->leakage[0].distance, 0);
  EXPECT_EQ(r.exit_code(), kExitAuditFindings);
  RunConfig original = fx.config();
  original.hash_preprocessed = false;
  EXPECT_EQ(run_audit(original).audit->leakage.size(), 1u);
}

TEST(RunAudit, UnreadableImagesAreListedAndRunContinues) {
  AuditFixture fx(false, true);
  const EvaluationReport r = run_audit(fx.config());
  ASSERT_EQ(r.audit->unreadable.size(), 1u);
  EXPECT_EQ(r.audit->unreadable[0].rfind("gone:", 0), 0u);
  EXPECT_EQ(r.audit->hashed, 9u);
  EXPECT_EQ(r.audit->composition.grand_total(), 10);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(RunAudit, DeterministicAcrossThreads) {
  AuditFixture fx(true);
  RunConfig one = fx.config();
  one.threads = 1;
  RunConfig many = fx.config();
  many.threads = 4;
  EXPECT_EQ(run_audit(one).to_json(), run_audit(many).to_json());
}

TEST(RunAudit, MergesManifestsInOrder) {
  AuditFixture fx(false);
  const std::string second = fx.dir.write(
      "stage2.csv", std::string(kManifestHeader) + "\nz0,IMG/I0.PNG,train,2,,55,f,27,stage2\n");
  RunConfig c = fx.config();
  c.manifest_paths.push_back(second);
  c.image_dir = fx.dir.path().string();
  const EvaluationReport r = run_audit(c);
  EXPECT_EQ(r.audit->merge_collisions, 1u);
  EXPECT_EQ(r.audit->composition.grand_total(), 9);
  EXPECT_EQ(r.audit->composition.count(Split::kTrain, ClassLabel::kOsteoporosis), 1);
  EXPECT_EQ(r.input_digests.size(), 3u);  // two manifests + image index
}

}  // namespace
}  // namespace screenkit
