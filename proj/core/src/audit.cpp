#include "screenkit/audit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "screenkit/error.hpp"

namespace screenkit {

MergeResult merge_stages(const SplitManifest& a, const SplitManifest& b) {
  a.validate();
  b.validate();
  std::unordered_map<std::string, const SampleRecord*> from_b;
  for (const auto& r : b.records) from_b.emplace(case_fold(r.image_path), &r);

  MergeResult result;
  std::unordered_set<std::string> taken;
  for (const auto& r : a.records) {
    const std::string key = case_fold(r.image_path);
    const auto it = from_b.find(key);
    if (it == from_b.end()) {
      result.manifest.records.push_back(r);
      continue;
    }
    const SampleRecord& winner = *it->second;
    ++result.collisions;
    if (r.class_label && winner.class_label &&
        *r.class_label != *winner.class_label) {
      result.warnings.push_back(
          "conflicting class labels for '" + r.image_path + "': " +
          std::string(to_string(*r.class_label)) + " vs " +
          std::string(to_string(*winner.class_label)) + "; keeping the latter");
    }
    result.manifest.records.push_back(winner);
    taken.insert(key);
  }
  for (const auto& r : b.records) {
    if (!taken.contains(case_fold(r.image_path))) result.manifest.records.push_back(r);
  }
  result.manifest.provenance = b.provenance.empty() || a.provenance == b.provenance
                                   ? a.provenance
                                   : a.provenance + " + " + b.provenance;
  result.manifest.validate();
  return result;
}

ClassLabel who_category(double t_score) {
  if (!std::isfinite(t_score)) throw ValidationError("T-score must be finite");
  if (t_score >= -1.0) return ClassLabel::kNormal;
  if (t_score > -2.5) return ClassLabel::kOsteopenia;
  return ClassLabel::kOsteoporosis;
}

ClassLabel effective_label(const SampleRecord& record) {
  if (record.class_label) return *record.class_label;
  if (record.t_score) return who_category(*record.t_score);
  throw ValidationError("record '" + record.sample_id +
                        "' has neither class_label nor t_score");
}

namespace {

constexpr int kHashSide = 32;
constexpr int kBlock = 8;

// basis[k][n] = alpha(k) cos(pi (2n + 1) k / 64), orthonormal DCT-II rows.
const std::array<std::array<double, kHashSide>, kBlock>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, kHashSide>, kBlock> m{};
    for (int k = 0; k < kBlock; ++k) {
      const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / kHashSide);
      for (int n = 0; n < kHashSide; ++n) {
        m[k][n] = alpha * std::cos(std::numbers::pi * (2 * n + 1) * k /
                                   (2.0 * kHashSide));
      }
    }
    return m;
  }();
  return basis;
}

}  // namespace

PhashDigest phash64(const GrayImage& image) {
  const std::vector<double> small = resize_bilinear_real(image, kHashSide, kHashSide);
  const auto& basis = dct_basis();

  // Column transform of every row, then row transform of the 8 kept columns.
  std::array<std::array<double, kBlock>, kHashSide> partial{};
  for (int y = 0; y < kHashSide; ++y) {
    for (int v = 0; v < kBlock; ++v) {
      double acc = 0.0;
      for (int x = 0; x < kHashSide; ++x) acc += basis[v][x] * small[y * kHashSide + x];
      partial[y][v] = acc;
    }
  }
  std::array<double, kBlock * kBlock> coeff{};
  for (int u = 0; u < kBlock; ++u) {
    for (int v = 0; v < kBlock; ++v) {
      double acc = 0.0;
      for (int y = 0; y < kHashSide; ++y) acc += basis[u][y] * partial[y][v];
      coeff[u * kBlock + v] = acc;
    }
  }

  std::array<double, kBlock * kBlock - 1> ac{};
  std::copy(coeff.begin() + 1, coeff.end(), ac.begin());
  std::nth_element(ac.begin(), ac.begin() + ac.size() / 2, ac.end());
  const double median = ac[ac.size() / 2];

  PhashDigest digest;
  for (int k = 0; k < kBlock * kBlock; ++k) {
    if (coeff[k] > median) digest.bits |= std::uint64_t{1} << k;
  }
  return digest;
}

int hamming(PhashDigest a, PhashDigest b) { return std::popcount(a.bits ^ b.bits); }

std::string to_hex(PhashDigest digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = kHex[(digest.bits >> (4 * i)) & 0xF];
  return out;
}

std::vector<LeakagePair> leakage_scan(
    const SplitManifest& manifest,
    const std::map<std::string, PhashDigest>& digests, int max_distance) {
  std::vector<PhashDigest> hashes;
  hashes.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    const auto it = digests.find(r.sample_id);
    if (it == digests.end()) {
      throw ValidationError("no digest for record '" + r.sample_id + "'");
    }
    hashes.push_back(it->second);
  }

  std::vector<LeakagePair> pairs;
  const auto& recs = manifest.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t j = i + 1; j < recs.size(); ++j) {
      if (recs[i].split == recs[j].split) continue;
      const int d = hamming(hashes[i], hashes[j]);
      if (d > max_distance) continue;
      const bool swap = recs[j].sample_id < recs[i].sample_id;
      const auto& first = swap ? recs[j] : recs[i];
      const auto& second = swap ? recs[i] : recs[j];
      pairs.push_back({first.sample_id, second.sample_id, first.split,
                       second.split, d});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    return std::tie(x.distance, x.id_a, x.id_b) <
           std::tie(y.distance, y.id_a, y.id_b);
  });
  return pairs;
}

std::int64_t CompositionTable::bone_loss(Split split) const {
  return count(split, ClassLabel::kOsteopenia) +
         count(split, ClassLabel::kOsteoporosis);
}

std::int64_t CompositionTable::split_total(Split split) const {
  const auto& row = counts[static_cast<int>(split)];
  return row[0] + row[1] + row[2];
}

std::int64_t CompositionTable::class_total(ClassLabel label) const {
  std::int64_t total = 0;
  for (const auto& row : counts) total += row[static_cast<int>(label)];
  return total;
}

std::int64_t CompositionTable::bone_loss_total() const {
  return class_total(ClassLabel::kOsteopenia) +
         class_total(ClassLabel::kOsteoporosis);
}

std::int64_t CompositionTable::grand_total() const {
  std::int64_t total = 0;
  for (int s = 0; s < kSplitCount; ++s) total += split_total(static_cast<Split>(s));
  return total;
}

CompositionTable composition_table(const SplitManifest& manifest) {
  CompositionTable table;
  for (const auto& r : manifest.records) {
    const ClassLabel label = effective_label(r);
    ++table.counts[static_cast<int>(r.split)][static_cast<int>(label)];
  }
  return table;
}

}  // namespace screenkit
