#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "screenkit/manifest.hpp"
#include "screenkit/metrics.hpp"

namespace screenkit {

// One row of the score-table exchange format written by model exporters.
struct ScoreRow {
  std::string sample_id;
  Split split = Split::kTest;
  ClassLabel label_class = ClassLabel::kNormal;
  double screen_prob = 0.0;
  std::optional<double> severe_prob;  // Bone-Loss rows only
  std::optional<double> tscore_pred;
  std::optional<double> tscore_ref;

  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

inline constexpr std::string_view kScoreTableHeader =
    "sample_id,split,label_class,screen_prob,severe_prob,tscore_pred,tscore_ref";

struct PairedValues {
  std::vector<double> pred;
  std::vector<double> ref;
  std::vector<int> strata;  // screening label of each pair
};

struct ScoreTable {
  std::vector<ScoreRow> rows;

  // Unique ids, probabilities in [0, 1], finite T-scores, severe_prob only on
  // Bone-Loss rows. Throws ValidationError naming the offending row.
  void validate() const;

  ScoreTable only(Split split) const;
  bool has_split(Split split) const;

  // Normal (0) vs Bone Loss (1) on screen_prob.
  LabeledScores screening() const;
  // Bone-Loss rows carrying severe_prob; Osteoporosis is the positive class.
  LabeledScores severity() const;
  std::size_t severity_rows() const;
  // Rows with both tscore_pred and tscore_ref.
  PairedValues tscores() const;
};

ScoreTable parse_score_table(std::istream& in);
ScoreTable read_score_table(const std::string& path);
void write_score_table(std::ostream& out, const ScoreTable& table);

}  // namespace screenkit
