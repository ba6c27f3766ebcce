// screenkit: command-line front end for the screening-evaluation toolkit.
//
//   screenkit preprocess       --in <dir|file> --out <dir>
//   screenkit audit            --manifest m.csv --images <dir>
//   screenkit select-threshold --scores val.csv
//   screenkit evaluate         --scores test.csv --tau 0.44
//   screenkit stats {bootstrap|fisherz|kw|chisq} ...
//
// Exit codes: 0 clean, 2 input or configuration error, 3 audit findings.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "screenkit/audit.hpp"
#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"
#include "screenkit/image.hpp"
#include "screenkit/image_io.hpp"
#include "screenkit/parallel.hpp"
#include "screenkit/report.hpp"
#include "screenkit/score_table.hpp"
#include "screenkit/stats.hpp"
#include "screenkit/threshold.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "json";
  unsigned threads = 0;
};

void emit(const GlobalOptions& global, const std::string& text) {
  if (global.out.empty()) {
    std::cout << text;
  } else {
    screenkit::write_text_file(global.out, text);
  }
}

std::optional<screenkit::Split> parse_split_option(const std::string& text) {
  if (text.empty() || text == "all") return std::nullopt;
  return screenkit::parse_split(text);
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOptions {
  std::string in;
  std::string out;
  int size = 512;
  double margin = 0.03;
  double fallback = 0.10;
  std::string clip = "1,99";
};

bool is_image_file(const fs::path& p) {
  std::string ext = screenkit::csv::to_lower(p.extension().string());
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

int run_preprocess(const PreprocessOptions& opt, const GlobalOptions& global) {
  screenkit::PreprocessConfig config;
  config.target_size = opt.size;
  config.margin_fraction = opt.margin;
  config.fallback_area_fraction = opt.fallback;
  const auto comma = opt.clip.find(',');
  if (comma == std::string::npos) {
    throw screenkit::ConfigError("--clip expects low,high (e.g. 1,99)");
  }
  config.clip_low_pct = screenkit::csv::parse_optional_double(opt.clip.substr(0, comma)).value_or(-1);
  config.clip_high_pct = screenkit::csv::parse_optional_double(opt.clip.substr(comma + 1)).value_or(-1);
  config.validate();

  std::vector<fs::path> inputs;
  if (fs::is_directory(opt.in)) {
    for (const auto& entry : fs::directory_iterator(opt.in)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());
  } else if (fs::is_regular_file(opt.in)) {
    inputs.emplace_back(opt.in);
  } else {
    throw screenkit::ValidationError("input '" + opt.in + "' does not exist");
  }
  fs::create_directories(opt.out);

  struct Outcome {
    std::optional<screenkit::PreprocessResult> result;
    std::string error;
    std::string output_name;
  };
  std::vector<Outcome> outcomes(inputs.size());
  screenkit::parallel_for(inputs.size(), screenkit::resolve_thread_count(global.threads),
                          [&](std::size_t i) {
    Outcome& o = outcomes[i];
    o.output_name = inputs[i].stem().string() + ".png";
    try {
      o.result = screenkit::preprocess_detailed(screenkit::read_image(inputs[i].string()), config);
      screenkit::write_png((fs::path(opt.out) / o.output_name).string(), o.result->image);
    } catch (const screenkit::Error& e) {
      o.error = e.what();
    }
  });

  std::ostringstream sidecar;
  sidecar << "source,output,x0,y0,x1,y1,fallback,otsu_level,p_lo,p_hi\n";
  int failures = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (!o.result) {
      std::cerr << "preprocess: " << inputs[i].string() << ": " << o.error << '\n';
      ++failures;
      continue;
    }
    const auto& r = *o.result;
    sidecar << screenkit::csv::escape(inputs[i].filename().string()) << ','
            << screenkit::csv::escape(o.output_name) << ',' << r.crop.box.x0 << ','
            << r.crop.box.y0 << ',' << r.crop.box.x1 << ',' << r.crop.box.y1 << ','
            << (r.crop.fallback ? 1 : 0) << ',' << static_cast<int>(r.otsu.level) << ','
            << screenkit::csv::format_double(r.bounds.low) << ','
            << screenkit::csv::format_double(r.bounds.high) << '\n';
  }
  screenkit::write_text_file((fs::path(opt.out) / "preprocess_manifest.csv").string(),
                             sidecar.str());
  std::cerr << "preprocess: " << (inputs.size() - failures) << " of " << inputs.size()
            << " image(s) written to " << opt.out << '\n';
  return failures == 0 ? screenkit::kExitClean : screenkit::kExitInputError;
}

// --------------------------------------------------------------------- stats

int run_stats_bootstrap(const std::string& scores, const std::string& metric, std::size_t reps,
                        double tau, const std::string& split, double level,
                        const GlobalOptions& global) {
  const screenkit::ScoreTable table = screenkit::read_score_table(scores);
  const auto which = parse_split_option(split);
  const screenkit::ScoreTable rows = which ? table.only(*which) : table;
  const screenkit::LabeledScores data = rows.screening();
  screenkit::BootstrapConfig config;
  config.replicates = reps;
  config.seed = global.seed;
  config.ci_level = level;
  config.threads = global.threads;
  const auto ci = screenkit::stratified_bootstrap_ci(
      data, screenkit::named_metric(metric, tau), config);
  ordered_json j = {{"metric", metric},
                    {"n", data.size()},
                    {"positives", data.positives()},
                    {"point", ci.point},
                    {"low", ci.low},
                    {"high", ci.high},
                    {"level", level},
                    {"method", "stratified_percentile_bootstrap"},
                    {"replicates", reps},
                    {"undefined_replicates", ci.undefined_replicates},
                    {"seed", global.seed},
                    {"input_sha256", screenkit::file_sha256(scores)}};
  if (std::find(screenkit::operating_point_metric_names().begin(),
                screenkit::operating_point_metric_names().end(),
                metric) != screenkit::operating_point_metric_names().end()) {
    j["tau"] = tau;
  }
  emit(global, j.dump(2) + "\n");
  return screenkit::kExitClean;
}

int run_stats_fisherz(double r, std::size_t n, double level, const GlobalOptions& global) {
  const auto ci = screenkit::fisher_z_ci(r, n, level);
  ordered_json j = {{"r", r},          {"n", n},           {"low", ci.low},
                    {"high", ci.high}, {"level", level}, {"method", "fisher_z"}};
  emit(global, j.dump(2) + "\n");
  return screenkit::kExitClean;
}

// groups.csv: header "group,value"; one observation per row.
int run_stats_kw(const std::string& path, const GlobalOptions& global) {
  const auto table = screenkit::csv::read_file(path);
  const auto gcol = table.column("group");
  const auto vcol = table.column("value");
  if (!gcol || !vcol) throw screenkit::ValidationError("groups file needs columns group,value");
  std::map<std::string, std::vector<double>> groups;
  for (const auto& row : table.rows) {
    const auto v = screenkit::csv::parse_optional_double(row[*vcol]);
    if (!v) continue;
    groups[screenkit::csv::trim(row[*gcol])].push_back(*v);
  }
  std::vector<std::vector<double>> data;
  ordered_json sizes;
  for (auto& [name, values] : groups) {
    sizes[name] = values.size();
    data.push_back(std::move(values));
  }
  const auto result = screenkit::kruskal_wallis(data);
  ordered_json j = {{"test", "kruskal_wallis"}, {"groups", sizes},   {"h", result.h},
                    {"df", result.df},          {"p_value", result.p_value}};
  emit(global, j.dump(2) + "\n");
  return screenkit::kExitClean;
}

// Inline table: rows separated by ';', cells by ','. E.g. "10,0;0,10".
int run_stats_chisq(const std::string& spec, const GlobalOptions& global) {
  std::vector<std::vector<std::int64_t>> table;
  std::stringstream rows(spec);
  std::string row;
  while (std::getline(rows, row, ';')) {
    std::vector<std::int64_t> cells;
    for (const auto& cell : screenkit::csv::split_line(row)) {
      const auto v = screenkit::csv::parse_optional_double(cell);
      if (!v || *v < 0 || *v != std::floor(*v)) {
        throw screenkit::ValidationError("chi-square cells must be nonnegative integers");
      }
      cells.push_back(static_cast<std::int64_t>(*v));
    }
    table.push_back(std::move(cells));
  }
  const auto result = screenkit::chi_square_test(table);
  ordered_json j = {{"test", "chi_square"}, {"table", table},       {"chi2", result.chi2},
                    {"df", result.df},      {"p_value", result.p_value}, {"continuity_correction", false}};
  emit(global, j.dump(2) + "\n");
  return screenkit::kExitClean;
}

ordered_json selection_summary(const screenkit::EvaluationReport& report) {
  const auto& s = *report.screening->selection;
  const auto& m = s.metrics_at_tau;
  auto opt = [](const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  return {{"tau_star", s.tau_star},
          {"feasible", s.feasible},
          {"feasible_set_size", s.feasible_set_size},
          {"sensitivity", opt(m.sensitivity)},
          {"specificity", opt(m.specificity)},
          {"counts",
           {{"tp", s.counts_at_tau.tp},
            {"fp", s.counts_at_tau.fp},
            {"fn", s.counts_at_tau.fn},
            {"tn", s.counts_at_tau.tn}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"screenkit: screening-evaluation toolkit"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Bootstrap seed")->capture_default_str();
  app.add_option("--out", global.out, "Output file (default: stdout)");
  app.add_option("--format", global.format, "Output format")
      ->check(CLI::IsMember({"json"}))
      ->capture_default_str();
  app.add_option("--threads", global.threads,
                 "Worker threads (default: SCREENKIT_THREADS or all cores)");

  // preprocess
  PreprocessOptions pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Crop, normalize and resize radiographs");
  pre_cmd->add_option("--in", pre.in, "Input image or directory")->required();
  pre_cmd->add_option("--out", pre.out, "Output directory")->required();
  pre_cmd->add_option("--size", pre.size, "Output side length")->capture_default_str();
  pre_cmd->add_option("--margin", pre.margin, "Crop margin fraction")->capture_default_str();
  pre_cmd->add_option("--fallback", pre.fallback, "Fallback area fraction")->capture_default_str();
  pre_cmd->add_option("--clip", pre.clip, "Clip percentiles low,high")->capture_default_str();

  // audit
  screenkit::RunConfig audit_cfg;
  audit_cfg.mode = screenkit::RunMode::kAudit;
  bool hash_original = false;
  auto* audit_cmd = app.add_subcommand("audit", "Composition table and cross-split leakage scan");
  audit_cmd->add_option("--manifest", audit_cfg.manifest_paths,
                        "Manifest CSV (repeat to merge stages in order)")
      ->required();
  audit_cmd->add_option("--images", audit_cfg.image_dir, "Image root directory");
  audit_cmd->add_option("--max-distance", audit_cfg.max_distance, "Hamming threshold")
      ->capture_default_str();
  audit_cmd->add_flag("--hash-original", hash_original,
                      "Hash decoded originals instead of preprocessed images");

  // select-threshold
  screenkit::RunConfig dev_cfg;
  dev_cfg.mode = screenkit::RunMode::kDevelop;
  std::string grid_text = "0.20:0.80:0.01";
  std::string report_path;
  auto* sel_cmd = app.add_subcommand("select-threshold",
                                     "Sensitivity-constrained threshold search on validation rows");
  sel_cmd->add_option("--scores", dev_cfg.score_path, "Score table CSV")->required();
  sel_cmd->add_option("--floor", dev_cfg.policy.sensitivity_floor, "Sensitivity floor")
      ->capture_default_str();
  sel_cmd->add_option("--grid", grid_text, "start:end:step")->capture_default_str();
  sel_cmd->add_option("--B", dev_cfg.bootstrap.replicates, "Bootstrap replicates")
      ->capture_default_str();
  sel_cmd->add_option("--report", report_path, "Also write the full evaluation report here");

  // evaluate
  screenkit::RunConfig fix_cfg;
  fix_cfg.mode = screenkit::RunMode::kInternalTest;
  double tau = screenkit::kDefaultTau;
  std::string mode_text = "internal_test";
  std::string split_text = "all";
  bool unstratified_regression = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Fixed-threshold evaluation report");
  eval_cmd->add_option("--scores", fix_cfg.score_path, "Score table CSV")->required();
  eval_cmd->add_option("--tau", tau, "Transferred threshold")->capture_default_str();
  eval_cmd->add_option("--severe-tau", fix_cfg.severe_tau, "Severity threshold (default: --tau)");
  eval_cmd->add_option("--mode", mode_text, "internal_test or external")
      ->check(CLI::IsMember({"internal_test", "external"}))
      ->capture_default_str();
  eval_cmd->add_option("--split", split_text, "Rows to evaluate (train/val/test/external/all)")
      ->capture_default_str();
  eval_cmd->add_option("--B", fix_cfg.bootstrap.replicates, "Bootstrap replicates")
      ->capture_default_str();
  eval_cmd->add_flag("--unstratified-regression", unstratified_regression,
                     "Resample T-score pairs without stratifying by class");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Stand-alone statistical procedures");
  stats_cmd->require_subcommand(1);
  std::string bs_scores, bs_metric = "auroc", bs_split = "all";
  std::size_t bs_reps = 2000;
  double bs_tau = screenkit::kDefaultTau, level = 0.95;
  auto* bs_cmd = stats_cmd->add_subcommand("bootstrap", "Stratified bootstrap CI of one metric");
  bs_cmd->add_option("--scores", bs_scores, "Score table CSV")->required();
  bs_cmd->add_option("--metric", bs_metric, "Metric name")->capture_default_str();
  bs_cmd->add_option("--B", bs_reps, "Replicates")->capture_default_str();
  bs_cmd->add_option("--tau", bs_tau, "Threshold for operating-point metrics")->capture_default_str();
  bs_cmd->add_option("--split", bs_split, "Rows to use")->capture_default_str();
  bs_cmd->add_option("--level", level, "Confidence level")->capture_default_str();
  double fz_r = 0.0;
  std::size_t fz_n = 0;
  auto* fz_cmd = stats_cmd->add_subcommand("fisherz", "Fisher z interval for Pearson r");
  fz_cmd->add_option("--r", fz_r, "Correlation")->required();
  fz_cmd->add_option("--n", fz_n, "Sample size")->required();
  fz_cmd->add_option("--level", level, "Confidence level")->capture_default_str();
  std::string kw_groups;
  auto* kw_cmd = stats_cmd->add_subcommand("kw", "Kruskal-Wallis test");
  kw_cmd->add_option("--groups", kw_groups, "CSV with columns group,value")->required();
  std::string chisq_table;
  auto* chi_cmd = stats_cmd->add_subcommand("chisq", "Pearson chi-square test of independence");
  chi_cmd->add_option("--table", chisq_table, "Counts, rows ';'-separated: 10,0;0,10")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : screenkit::kExitInputError;
  }

  try {
    if (*pre_cmd) return run_preprocess(pre, global);

    if (*audit_cmd) {
      audit_cfg.hash_preprocessed = !hash_original;
      audit_cfg.threads = global.threads;
      audit_cfg.bootstrap.seed = global.seed;
      const auto report = screenkit::run_audit(audit_cfg);
      emit(global, report.to_json());
      const auto& a = *report.audit;
      std::cerr << "audit: " << a.hashed << " image(s) hashed, " << a.leakage.size()
                << " cross-split pair(s) within distance " << a.max_distance;
      if (!a.unreadable.empty()) std::cerr << ", " << a.unreadable.size() << " unreadable";
      std::cerr << '\n';
      for (const auto& u : a.unreadable) std::cerr << "  unreadable: " << u << '\n';
      return report.exit_code();
    }

    if (*sel_cmd) {
      dev_cfg.policy.grid = screenkit::ThresholdGrid::parse(grid_text);
      dev_cfg.bootstrap.seed = global.seed;
      dev_cfg.bootstrap.threads = global.threads;
      const auto report = screenkit::run_develop(dev_cfg);
      if (!report_path.empty()) screenkit::write_text_file(report_path, report.to_json());
      emit(global, selection_summary(report).dump(2) + "\n");
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      return report.exit_code();
    }

    if (*eval_cmd) {
      fix_cfg.mode = screenkit::parse_run_mode(mode_text);
      fix_cfg.tau = tau;
      fix_cfg.split = parse_split_option(split_text);
      fix_cfg.stratify_regression = !unstratified_regression;
      fix_cfg.bootstrap.seed = global.seed;
      fix_cfg.bootstrap.threads = global.threads;
      const auto report = screenkit::run_fixed(fix_cfg);
      emit(global, report.to_json());
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      return report.exit_code();
    }

    if (*bs_cmd) {
      return run_stats_bootstrap(bs_scores, bs_metric, bs_reps, bs_tau, bs_split, level, global);
    }
    if (*fz_cmd) return run_stats_fisherz(fz_r, fz_n, level, global);
    if (*kw_cmd) return run_stats_kw(kw_groups, global);
    if (*chi_cmd) return run_stats_chisq(chisq_table, global);
  } catch (const screenkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return screenkit::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return screenkit::kExitInputError;
  }
  return screenkit::kExitInputError;
}
