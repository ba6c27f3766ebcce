#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace screenkit {

// Interleaved 8-bit image as decoded from disk. Only 1 (gray) and 3 (RGB)
// channels are accepted by the pipeline.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;  // row-major, channel-interleaved
};

// Single-channel 8-bit image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);
  GrayImage(int w, int h, std::vector<std::uint8_t> px);

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

RawImage to_raw(const GrayImage& image);

// Half-open pixel rectangle: [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  static BoundingBox full(int w, int h) { return {0, 0, w, h}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct PreprocessConfig {
  double margin_fraction = 0.03;
  double fallback_area_fraction = 0.10;
  double clip_low_pct = 1.0;
  double clip_high_pct = 99.0;
  int target_size = 512;

  // Throws ValidationError when a field is out of range.
  void validate() const;
};

struct OtsuResult {
  std::uint8_t level = 0;
  // Set when no cut separates the histogram (constant image).
  bool degenerate = false;
};

// Output of the cropping stage: the box actually used and whether the
// full-image fallback was taken.
struct ForegroundCrop {
  BoundingBox box;
  bool fallback = false;
  std::int64_t foreground_area = 0;  // tight box area before the margin
};

struct PercentileBounds {
  double low = 0.0;
  double high = 0.0;
};

struct PreprocessResult {
  GrayImage image;
  ForegroundCrop crop;
  OtsuResult otsu;
  PercentileBounds bounds;
};

// Luma conversion (0.299 R + 0.587 G + 0.114 B, rounded half up). One-channel
// input is returned unchanged. Throws FormatError for other channel counts.
GrayImage to_grayscale(const RawImage& image);

// Smallest level t maximizing between-class variance, foreground being the
// pixels strictly above t. Ties are resolved with exact integer arithmetic.
OtsuResult otsu_threshold(const GrayImage& image);

ForegroundCrop locate_foreground(const GrayImage& image, int threshold,
                                 const PreprocessConfig& config);

// Tight box of pixels > threshold, grown by ceil(margin * box extent) per
// side and clamped; the full image when the tight box covers less than
// fallback_area_fraction of the image or nothing exceeds the threshold.
BoundingBox foreground_bbox(const GrayImage& image, int threshold,
                            const PreprocessConfig& config);

GrayImage crop(const GrayImage& image, const BoundingBox& box);

// Linearly interpolated percentile (0..100) of the pixel multiset.
double percentile(const GrayImage& image, double pct);

PercentileBounds percentile_bounds(const GrayImage& image, double low_pct,
                                   double high_pct);

// Clips to [p_lo, p_hi] and rescales to 0..255. Emits a constant 128 image
// when p_lo == p_hi.
GrayImage percentile_clip_rescale(const GrayImage& image, double low_pct,
                                  double high_pct);
GrayImage clip_rescale(const GrayImage& image, PercentileBounds bounds);

// Bilinear resampling with half-pixel centers and edge clamping. Sample
// positions and weights are exact rationals, so results are bit-exact.
GrayImage resize_bilinear(const GrayImage& image, int width, int height);
GrayImage resize_bilinear(const GrayImage& image, int target);

// Same sampling grid without quantization.
std::vector<double> resize_bilinear_real(const GrayImage& image, int width,
                                         int height);

PreprocessResult preprocess_detailed(const RawImage& image,
                                     const PreprocessConfig& config = {});
GrayImage preprocess(const RawImage& image, const PreprocessConfig& config = {});

// Runs preprocess_detailed over a batch with up to `threads` workers
// (0 = default). Output order matches input order.
std::vector<PreprocessResult> preprocess_batch(std::span<const RawImage> images,
                                               const PreprocessConfig& config,
                                               unsigned threads = 0);

}  // namespace screenkit
