#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace screenkit {

enum class Split { kTrain, kVal, kTest, kExternal };
inline constexpr int kSplitCount = 4;

enum class ClassLabel { kNormal = 0, kOsteopenia = 1, kOsteoporosis = 2 };
inline constexpr int kClassCount = 3;

enum class Sex { kFemale = 0, kMale = 1 };

enum class Stage { kStage1, kStage2, kExternal };

std::string_view to_string(Split split);
std::string_view to_string(ClassLabel label);
std::string_view to_string(Sex sex);
std::string_view to_string(Stage stage);

// Parsers accept the canonical names case-insensitively; class labels also
// accept 0/1/2, sex also accepts f/m and 0/1 (female = 0).
Split parse_split(std::string_view text);
ClassLabel parse_class_label(std::string_view text);
Sex parse_sex(std::string_view text);
Stage parse_stage(std::string_view text);

inline bool is_bone_loss(ClassLabel label) {
  return label != ClassLabel::kNormal;
}

struct SampleRecord {
  std::string sample_id;
  std::string image_path;
  Split split = Split::kTrain;
  std::optional<ClassLabel> class_label;
  std::optional<double> t_score;
  std::optional<double> age;
  std::optional<Sex> sex;
  std::optional<double> bmi;
  Stage stage = Stage::kStage1;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SplitManifest {
  std::vector<SampleRecord> records;
  std::string provenance;

  // Unique sample ids, unique case-folded paths, label-or-T-score present,
  // finite T-scores. Throws ValidationError naming the first offender.
  void validate() const;
};

// ASCII case folding used for path deduplication.
std::string case_fold(std::string_view path);

inline constexpr std::string_view kManifestHeader =
    "sample_id,image_path,split,class_label,t_score,age,sex,bmi,stage";

SplitManifest parse_manifest(std::istream& in, std::string provenance = {});
SplitManifest read_manifest(const std::string& path);
void write_manifest(std::ostream& out, const SplitManifest& manifest);

}  // namespace screenkit
