#include "screenkit/image.hpp"

#include <algorithm>
#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <string>

#include "screenkit/error.hpp"
#include "screenkit/parallel.hpp"

namespace screenkit {

namespace {

using Histogram = std::array<std::int64_t, 256>;

Histogram histogram(const GrayImage& image) {
  Histogram h{};
  for (auto v : image.pixels) ++h[v];
  return h;
}

void check_image(const GrayImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() !=
          static_cast<std::size_t>(image.width) * image.height) {
    throw ValidationError("image dimensions do not match pixel buffer");
  }
}

// ceil(fraction * extent), tolerant of representation error so that e.g.
// 0.03 * 100 yields 3 rather than 4.
int margin_pixels(double fraction, int extent) {
  const double raw = fraction * extent;
  const double nearest = std::round(raw);
  if (std::abs(raw - nearest) < 1e-9) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(raw));
}

// Source sample position for destination index i as an exact fraction:
// (i + 0.5) * src / dst - 0.5 = ((2i + 1) src - dst) / (2 dst).
struct Tap {
  int i0;
  int i1;
  std::int64_t frac;  // weight of i1, in units of 1/denominator
};

std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> out(dst);
  const std::int64_t den = 2 * static_cast<std::int64_t>(dst);
  for (int i = 0; i < dst; ++i) {
    const std::int64_t num =
        (2 * static_cast<std::int64_t>(i) + 1) * src - dst;
    Tap t{0, 0, 0};
    if (num > 0) {
      t.i0 = static_cast<int>(num / den);
      t.frac = num % den;
    }
    if (t.i0 >= src - 1) {
      t.i0 = src - 1;
      t.frac = 0;
    }
    t.i1 = std::min(t.i0 + 1, src - 1);
    out[i] = t;
  }
  return out;
}

}  // namespace

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h),
      pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {}

GrayImage::GrayImage(int w, int h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  check_image(*this);
}

RawImage to_raw(const GrayImage& image) {
  return RawImage{image.width, image.height, 1, image.pixels};
}

void PreprocessConfig::validate() const {
  if (!(margin_fraction >= 0.0 && margin_fraction < 0.5)) {
    throw ValidationError("margin_fraction must be in [0, 0.5)");
  }
  if (!(fallback_area_fraction > 0.0 && fallback_area_fraction < 1.0)) {
    throw ValidationError("fallback_area_fraction must be in (0, 1)");
  }
  if (!(clip_low_pct >= 0.0 && clip_low_pct < clip_high_pct &&
        clip_high_pct <= 100.0)) {
    throw ValidationError("clip percentiles must satisfy 0 <= low < high <= 100");
  }
  if (target_size < 1) throw ValidationError("target_size must be >= 1");
}

GrayImage to_grayscale(const RawImage& image) {
  if (image.width < 1 || image.height < 1) {
    throw FormatError("image has zero width or height");
  }
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError("unsupported channel count " +
                      std::to_string(image.channels));
  }
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  if (image.data.size() != n * image.channels) {
    throw FormatError("pixel buffer size does not match dimensions");
  }
  if (image.channels == 1) return GrayImage(image.width, image.height, image.data);

  std::vector<std::uint8_t> gray(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int r = image.data[3 * i];
    const int g = image.data[3 * i + 1];
    const int b = image.data[3 * i + 2];
    gray[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return GrayImage(image.width, image.height, std::move(gray));
}

OtsuResult otsu_threshold(const GrayImage& image) {
  check_image(image);
  using boost::multiprecision::int256_t;
  const Histogram h = histogram(image);
  const std::int64_t n = static_cast<std::int64_t>(image.size());
  std::int64_t total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += v * h[v];

  // Between-class variance at cut t is proportional to
  //   (S0 * N - S * W0)^2 / (W0 * W1)
  // with W0, S0 the count and intensity sum of pixels <= t.
  OtsuResult best{0, true};
  int256_t best_num = 0;
  int256_t best_den = 1;
  std::int64_t w0 = 0;
  std::int64_t s0 = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += h[t];
    s0 += t * h[t];
    const std::int64_t w1 = n - w0;
    if (w0 == 0 || w1 == 0) continue;
    const int256_t diff = int256_t(s0) * n - int256_t(total_sum) * w0;
    const int256_t num = diff * diff;
    const int256_t den = int256_t(w0) * w1;
    if (best.degenerate || num * best_den > best_num * den) {
      best = {static_cast<std::uint8_t>(t), false};
      best_num = num;
      best_den = den;
    }
  }
  if (best.degenerate) return {0, true};
  return best;
}

ForegroundCrop locate_foreground(const GrayImage& image, int threshold,
                                 const PreprocessConfig& config) {
  check_image(image);
  if (threshold < 0 || threshold > 255) {
    throw ValidationError("threshold must be in [0, 255]");
  }
  const BoundingBox full = BoundingBox::full(image.width, image.height);
  int x0 = image.width, y0 = image.height, x1 = 0, y1 = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (image.at(x, y) > threshold) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1);
        y1 = std::max(y1, y + 1);
      }
    }
  }
  if (x1 == 0) return {full, true, 0};

  const BoundingBox tight{x0, y0, x1, y1};
  const double image_area =
      static_cast<double>(image.width) * static_cast<double>(image.height);
  if (static_cast<double>(tight.area()) <
      config.fallback_area_fraction * image_area) {
    return {full, true, tight.area()};
  }
  const int mx = margin_pixels(config.margin_fraction, tight.width());
  const int my = margin_pixels(config.margin_fraction, tight.height());
  BoundingBox grown{std::max(0, x0 - mx), std::max(0, y0 - my),
                    std::min(image.width, x1 + mx),
                    std::min(image.height, y1 + my)};
  return {grown, false, tight.area()};
}

BoundingBox foreground_bbox(const GrayImage& image, int threshold,
                            const PreprocessConfig& config) {
  return locate_foreground(image, threshold, config).box;
}

GrayImage crop(const GrayImage& image, const BoundingBox& box) {
  check_image(image);
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > image.width ||
      box.y1 > image.height || box.x0 >= box.x1 || box.y0 >= box.y1) {
    throw ValidationError("crop box outside image bounds");
  }
  GrayImage out(box.width(), box.height());
  for (int y = 0; y < out.height; ++y) {
    const auto* row = &image.pixels[static_cast<std::size_t>(box.y0 + y) *
                                        image.width + box.x0];
    std::copy(row, row + out.width,
              &out.pixels[static_cast<std::size_t>(y) * out.width]);
  }
  return out;
}

double percentile(const GrayImage& image, double pct) {
  check_image(image);
  if (!(pct >= 0.0 && pct <= 100.0)) {
    throw ValidationError("percentile must be in [0, 100]");
  }
  const Histogram h = histogram(image);
  const std::int64_t n = static_cast<std::int64_t>(image.size());
  // k-th order statistic (0-based) read off the cumulative histogram.
  auto order_stat = [&](std::int64_t k) {
    std::int64_t cum = 0;
    for (int v = 0; v < 256; ++v) {
      cum += h[v];
      if (cum > k) return v;
    }
    return 255;
  };
  const double pos = static_cast<double>(n - 1) * pct / 100.0;
  const auto lo = static_cast<std::int64_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  const int v_lo = order_stat(lo);
  const int v_hi = order_stat(std::min(lo + 1, n - 1));
  return v_lo + frac * (v_hi - v_lo);
}

PercentileBounds percentile_bounds(const GrayImage& image, double low_pct,
                                   double high_pct) {
  if (!(low_pct >= 0.0 && low_pct < high_pct && high_pct <= 100.0)) {
    throw ValidationError("clip percentiles must satisfy 0 <= low < high <= 100");
  }
  return {percentile(image, low_pct), percentile(image, high_pct)};
}

GrayImage clip_rescale(const GrayImage& image, PercentileBounds bounds) {
  check_image(image);
  GrayImage out(image.width, image.height);
  if (!(bounds.high > bounds.low)) {
    std::fill(out.pixels.begin(), out.pixels.end(), 128);
    return out;
  }
  std::array<std::uint8_t, 256> lut{};
  const double span = bounds.high - bounds.low;
  for (int v = 0; v < 256; ++v) {
    const double c = std::clamp(static_cast<double>(v), bounds.low, bounds.high);
    const long q = std::lround(255.0 * (c - bounds.low) / span);
    lut[v] = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
  }
  std::transform(image.pixels.begin(), image.pixels.end(), out.pixels.begin(),
                 [&](std::uint8_t v) { return lut[v]; });
  return out;
}

GrayImage percentile_clip_rescale(const GrayImage& image, double low_pct,
                                  double high_pct) {
  return clip_rescale(image, percentile_bounds(image, low_pct, high_pct));
}

GrayImage resize_bilinear(const GrayImage& image, int width, int height) {
  check_image(image);
  if (width < 1 || height < 1) throw ValidationError("target size must be >= 1");
  const auto xt = taps(image.width, width);
  const auto yt = taps(image.height, height);
  const std::int64_t dx = 2 * static_cast<std::int64_t>(width);
  const std::int64_t dy = 2 * static_cast<std::int64_t>(height);
  const std::int64_t denom = dx * dy;
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = yt[y];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xt[x];
      const std::int64_t a = image.at(tx.i0, ty.i0);
      const std::int64_t b = image.at(tx.i1, ty.i0);
      const std::int64_t c = image.at(tx.i0, ty.i1);
      const std::int64_t d = image.at(tx.i1, ty.i1);
      const std::int64_t sum = (dx - tx.frac) * (dy - ty.frac) * a +
                               tx.frac * (dy - ty.frac) * b +
                               (dx - tx.frac) * ty.frac * c +
                               tx.frac * ty.frac * d;
      // Round half up: floor(sum / denom + 1/2).
      out.at(x, y) = static_cast<std::uint8_t>((2 * sum + denom) / (2 * denom));
    }
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& image, int target) {
  return resize_bilinear(image, target, target);
}

std::vector<double> resize_bilinear_real(const GrayImage& image, int width,
                                         int height) {
  check_image(image);
  if (width < 1 || height < 1) throw ValidationError("target size must be >= 1");
  const auto xt = taps(image.width, width);
  const auto yt = taps(image.height, height);
  const double dx = 2.0 * width;
  const double dy = 2.0 * height;
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const double fy = static_cast<double>(yt[y].frac) / dy;
    for (int x = 0; x < width; ++x) {
      const double fx = static_cast<double>(xt[x].frac) / dx;
      const double a = image.at(xt[x].i0, yt[y].i0);
      const double b = image.at(xt[x].i1, yt[y].i0);
      const double c = image.at(xt[x].i0, yt[y].i1);
      const double d = image.at(xt[x].i1, yt[y].i1);
      const double top = a + fx * (b - a);
      const double bottom = c + fx * (d - c);
      out[static_cast<std::size_t>(y) * width + x] = top + fy * (bottom - top);
    }
  }
  return out;
}

PreprocessResult preprocess_detailed(const RawImage& image,
                                     const PreprocessConfig& config) {
  config.validate();
  PreprocessResult result;
  const GrayImage gray = to_grayscale(image);
  result.otsu = otsu_threshold(gray);
  if (result.otsu.degenerate) {
    result.crop = {BoundingBox::full(gray.width, gray.height), true, 0};
  } else {
    result.crop = locate_foreground(gray, result.otsu.level, config);
  }
  const GrayImage cropped = crop(gray, result.crop.box);
  result.bounds =
      percentile_bounds(cropped, config.clip_low_pct, config.clip_high_pct);
  result.image = resize_bilinear(clip_rescale(cropped, result.bounds),
                                 config.target_size);
  return result;
}

GrayImage preprocess(const RawImage& image, const PreprocessConfig& config) {
  return preprocess_detailed(image, config).image;
}

std::vector<PreprocessResult> preprocess_batch(std::span<const RawImage> images,
                                               const PreprocessConfig& config,
                                               unsigned threads) {
  config.validate();
  std::vector<PreprocessResult> out(images.size());
  parallel_for(images.size(), resolve_thread_count(threads),
               [&](std::size_t i) { out[i] = preprocess_detailed(images[i], config); });
  return out;
}

}  // namespace screenkit
