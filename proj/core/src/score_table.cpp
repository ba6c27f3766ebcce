#include "screenkit/score_table.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

namespace screenkit {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void ScoreTable::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& r : rows) {
    const std::string where = "score row '" + r.sample_id + "': ";
    if (r.sample_id.empty()) throw ValidationError("score row with empty sample_id");
    if (!ids.insert(r.sample_id).second) {
      throw ValidationError("duplicate sample_id '" + r.sample_id + "'");
    }
    if (!is_probability(r.screen_prob)) {
      throw ValidationError(where + "screen_prob is not a probability");
    }
    if (r.severe_prob) {
      if (!is_bone_loss(r.label_class)) {
        throw ValidationError(where + "severe_prob given for a Normal row");
      }
      if (!is_probability(*r.severe_prob)) {
        throw ValidationError(where + "severe_prob is not a probability");
      }
    }
    if ((r.tscore_pred && !std::isfinite(*r.tscore_pred)) ||
        (r.tscore_ref && !std::isfinite(*r.tscore_ref))) {
      throw ValidationError(where + "non-finite T-score");
    }
  }
}

ScoreTable ScoreTable::only(Split split) const {
  ScoreTable out;
  for (const auto& r : rows) {
    if (r.split == split) out.rows.push_back(r);
  }
  return out;
}

bool ScoreTable::has_split(Split split) const {
  for (const auto& r : rows) {
    if (r.split == split) return true;
  }
  return false;
}

LabeledScores ScoreTable::screening() const {
  LabeledScores data;
  data.labels.reserve(rows.size());
  data.scores.reserve(rows.size());
  for (const auto& r : rows) {
    data.labels.push_back(is_bone_loss(r.label_class) ? 1 : 0);
    data.scores.push_back(r.screen_prob);
  }
  return data;
}

LabeledScores ScoreTable::severity() const {
  LabeledScores data;
  for (const auto& r : rows) {
    if (!is_bone_loss(r.label_class) || !r.severe_prob) continue;
    data.labels.push_back(r.label_class == ClassLabel::kOsteoporosis ? 1 : 0);
    data.scores.push_back(*r.severe_prob);
  }
  return data;
}

std::size_t ScoreTable::severity_rows() const {
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (is_bone_loss(r.label_class) && r.severe_prob) ++n;
  }
  return n;
}

PairedValues ScoreTable::tscores() const {
  PairedValues out;
  for (const auto& r : rows) {
    if (!r.tscore_pred || !r.tscore_ref) continue;
    out.pred.push_back(*r.tscore_pred);
    out.ref.push_back(*r.tscore_ref);
    out.strata.push_back(is_bone_loss(r.label_class) ? 1 : 0);
  }
  return out;
}

ScoreTable parse_score_table(std::istream& in) {
  const csv::Table table = csv::parse(in);
  static constexpr std::string_view kColumns[] = {
      "sample_id",   "split",       "label_class", "screen_prob",
      "severe_prob", "tscore_pred", "tscore_ref"};
  std::size_t col[7];
  for (std::size_t i = 0; i < 7; ++i) {
    const auto c = table.column(kColumns[i]);
    if (!c) {
      throw ValidationError("score table missing column '" +
                            std::string(kColumns[i]) + "'");
    }
    col[i] = *c;
  }
  ScoreTable scores;
  scores.rows.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      ScoreRow r;
      r.sample_id = csv::trim(row[col[0]]);
      r.split = parse_split(row[col[1]]);
      r.label_class = parse_class_label(row[col[2]]);
      const auto screen = csv::parse_optional_double(row[col[3]]);
      if (!screen) throw ValidationError("screen_prob is required");
      r.screen_prob = *screen;
      r.severe_prob = csv::parse_optional_double(row[col[4]]);
      r.tscore_pred = csv::parse_optional_double(row[col[5]]);
      r.tscore_ref = csv::parse_optional_double(row[col[6]]);
      scores.rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw ValidationError("score table line " +
                            std::to_string(table.line_numbers[i]) + ": " +
                            e.what());
    }
  }
  scores.validate();
  return scores;
}

ScoreTable read_score_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open score table '" + path + "'");
  try {
    return parse_score_table(in);
  } catch (const Error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_score_table(std::ostream& out, const ScoreTable& table) {
  auto opt = [](const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
  };
  out << kScoreTableHeader << '\n';
  for (const auto& r : table.rows) {
    out << csv::escape(r.sample_id) << ',' << to_string(r.split) << ','
        << static_cast<int>(r.label_class) << ','
        << csv::format_double(r.screen_prob) << ',' << opt(r.severe_prob) << ','
        << opt(r.tscore_pred) << ',' << opt(r.tscore_ref) << '\n';
  }
}

}  // namespace screenkit
