#include "screenkit/manifest.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "screenkit/csv.hpp"
#include "screenkit/error.hpp"

namespace screenkit {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kExternal: return "external";
  }
  return "?";
}

std::string_view to_string(ClassLabel label) {
  switch (label) {
    case ClassLabel::kNormal: return "Normal";
    case ClassLabel::kOsteopenia: return "Osteopenia";
    case ClassLabel::kOsteoporosis: return "Osteoporosis";
  }
  return "?";
}

std::string_view to_string(Sex sex) {
  return sex == Sex::kFemale ? "female" : "male";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kStage1: return "stage1";
    case Stage::kStage2: return "stage2";
    case Stage::kExternal: return "external";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  const std::string t = csv::to_lower(csv::trim(text));
  if (t == "train") return Split::kTrain;
  if (t == "val" || t == "validation") return Split::kVal;
  if (t == "test") return Split::kTest;
  if (t == "external") return Split::kExternal;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

ClassLabel parse_class_label(std::string_view text) {
  const std::string t = csv::to_lower(csv::trim(text));
  if (t == "0" || t == "normal") return ClassLabel::kNormal;
  if (t == "1" || t == "osteopenia") return ClassLabel::kOsteopenia;
  if (t == "2" || t == "osteoporosis") return ClassLabel::kOsteoporosis;
  throw ValidationError("unknown class label '" + std::string(text) + "'");
}

Sex parse_sex(std::string_view text) {
  const std::string t = csv::to_lower(csv::trim(text));
  if (t == "female" || t == "f" || t == "0") return Sex::kFemale;
  if (t == "male" || t == "m" || t == "1") return Sex::kMale;
  throw ValidationError("unknown sex '" + std::string(text) + "'");
}

Stage parse_stage(std::string_view text) {
  const std::string t = csv::to_lower(csv::trim(text));
  if (t == "stage1" || t == "1") return Stage::kStage1;
  if (t == "stage2" || t == "2") return Stage::kStage2;
  if (t == "external") return Stage::kExternal;
  throw ValidationError("unknown stage '" + std::string(text) + "'");
}

std::string case_fold(std::string_view path) { return csv::to_lower(path); }

void SplitManifest::validate() const {
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> paths;
  for (const auto& r : records) {
    if (r.sample_id.empty()) throw ValidationError("record with empty sample_id");
    if (!ids.insert(r.sample_id).second) {
      throw ValidationError("duplicate sample_id '" + r.sample_id + "'");
    }
    if (!paths.insert(case_fold(r.image_path)).second) {
      throw ValidationError("duplicate image_path '" + r.image_path +
                            "' (case-insensitive)");
    }
    if (!r.class_label && !r.t_score) {
      throw ValidationError("record '" + r.sample_id +
                            "' has neither class_label nor t_score");
    }
    if (r.t_score && !std::isfinite(*r.t_score)) {
      throw ValidationError("record '" + r.sample_id + "' has non-finite t_score");
    }
  }
}

SplitManifest parse_manifest(std::istream& in, std::string provenance) {
  const csv::Table table = csv::parse(in);
  static constexpr std::string_view kColumns[] = {
      "sample_id", "image_path", "split", "class_label", "t_score",
      "age",       "sex",        "bmi",   "stage"};
  std::size_t col[9];
  for (std::size_t i = 0; i < 9; ++i) {
    const auto c = table.column(kColumns[i]);
    if (!c) {
      throw ValidationError("manifest missing column '" +
                            std::string(kColumns[i]) + "'");
    }
    col[i] = *c;
  }

  SplitManifest manifest;
  manifest.provenance = std::move(provenance);
  manifest.records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      SampleRecord r;
      r.sample_id = csv::trim(row[col[0]]);
      r.image_path = csv::trim(row[col[1]]);
      r.split = parse_split(row[col[2]]);
      if (!csv::trim(row[col[3]]).empty()) r.class_label = parse_class_label(row[col[3]]);
      r.t_score = csv::parse_optional_double(row[col[4]]);
      r.age = csv::parse_optional_double(row[col[5]]);
      if (!csv::trim(row[col[6]]).empty()) r.sex = parse_sex(row[col[6]]);
      r.bmi = csv::parse_optional_double(row[col[7]]);
      r.stage = parse_stage(row[col[8]]);
      manifest.records.push_back(std::move(r));
    } catch (const Error& e) {
      throw ValidationError("manifest line " +
                            std::to_string(table.line_numbers[i]) + ": " +
                            e.what());
    }
  }
  manifest.validate();
  return manifest;
}

SplitManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open manifest '" + path + "'");
  try {
    return parse_manifest(in, path);
  } catch (const Error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_manifest(std::ostream& out, const SplitManifest& manifest) {
  auto opt = [](const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
  };
  out << kManifestHeader << '\n';
  for (const auto& r : manifest.records) {
    out << csv::escape(r.sample_id) << ',' << csv::escape(r.image_path) << ','
        << to_string(r.split) << ','
        << (r.class_label ? std::to_string(static_cast<int>(*r.class_label)) : "")
        << ',' << opt(r.t_score) << ',' << opt(r.age) << ','
        << (r.sex ? std::string(to_string(*r.sex)) : "") << ',' << opt(r.bmi)
        << ',' << to_string(r.stage) << '\n';
  }
}

}  // namespace screenkit
