#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "screenkit/image.hpp"
#include "screenkit/manifest.hpp"

namespace screenkit {

struct MergeResult {
  SplitManifest manifest;
  std::size_t collisions = 0;
  std::vector<std::string> warnings;
};

// Union of two stage manifests keyed on case-folded image path. On collision
// the record from `b` replaces the one from `a` in a's position; records only
// in `b` follow in b's order. Conflicting class labels produce a warning.
MergeResult merge_stages(const SplitManifest& a, const SplitManifest& b);

// WHO bone-density category: Normal (t >= -1.0), Osteopenia (-2.5 < t < -1.0),
// Osteoporosis (t <= -2.5). Throws ValidationError for non-finite t.
ClassLabel who_category(double t_score);

// The record's class label, or the WHO category of its T-score.
ClassLabel effective_label(const SampleRecord& record);

struct PhashDigest {
  std::uint64_t bits = 0;
  friend bool operator==(const PhashDigest&, const PhashDigest&) = default;
};

// 64-bit DCT perceptual hash: 32x32 bilinear downsample, orthonormal 2-D
// DCT-II, top-left 8x8 block; bit (8u + v) is set iff coefficient (u, v)
// exceeds the median of the 63 AC coefficients.
PhashDigest phash64(const GrayImage& image);

int hamming(PhashDigest a, PhashDigest b);

std::string to_hex(PhashDigest digest);

struct LeakagePair {
  std::string id_a;  // id_a < id_b lexicographically
  std::string id_b;
  Split split_a = Split::kTrain;
  Split split_b = Split::kTrain;
  int distance = 0;

  friend bool operator==(const LeakagePair&, const LeakagePair&) = default;
};

// Every cross-split record pair whose digests differ in at most
// `max_distance` bits, ordered by (distance, id_a, id_b). Throws
// ValidationError if a record has no digest.
std::vector<LeakagePair> leakage_scan(
    const SplitManifest& manifest,
    const std::map<std::string, PhashDigest>& digests, int max_distance = 4);

struct CompositionTable {
  // counts[split][class]
  std::array<std::array<std::int64_t, kClassCount>, kSplitCount> counts{};

  std::int64_t count(Split split, ClassLabel label) const {
    return counts[static_cast<int>(split)][static_cast<int>(label)];
  }
  std::int64_t bone_loss(Split split) const;
  std::int64_t split_total(Split split) const;
  std::int64_t class_total(ClassLabel label) const;
  std::int64_t bone_loss_total() const;
  std::int64_t grand_total() const;
};

// Per-split, per-class counts. Records without class_label are categorized
// by who_category; a record with neither raises ValidationError.
CompositionTable composition_table(const SplitManifest& manifest);

}  // namespace screenkit
