#include "anw/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anw {
namespace {

double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

Image random_crop(const Image& image, int pad, Rng& rng) {
  if (pad < 0) throw std::invalid_argument("random_crop: pad must be non-negative");
  if (pad == 0) return image;

  const int h = image.height, w = image.width;
  const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * pad + 1)));
  const int dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * pad + 1)));

  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = y + dy - pad;
    if (sy < 0 || sy >= h) continue;  // rows stay zero
    for (int x = 0; x < w; ++x) {
      const int sx = x + dx - pad;
      if (sx < 0 || sx >= w) continue;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

Image flip_columns(const Image& image) {
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
  return out;
}

Image horizontal_flip(const Image& image, Rng& rng) {
  return rng.next_double() < 0.5 ? flip_columns(image) : image;
}

Image cutout(const Image& image, int size, Rng& rng) {
  if (size < 0) throw std::invalid_argument("cutout: size must be non-negative");
  if (size == 0) return image;

  const int h = image.height, w = image.width;
  const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
  const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
  const int y0 = std::max(0, cy - size / 2), y1 = std::min(h, cy - size / 2 + size);
  const int x0 = std::max(0, cx - size / 2), x1 = std::min(w, cx - size / 2 + size);

  Image out = image;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0;
  return out;
}

Image gaussian_noise(const Image& image, double sigma2, Rng& rng) {
  if (sigma2 < 0.0) throw std::invalid_argument("gaussian_noise: sigma2 must be non-negative");
  if (sigma2 == 0.0) return image;
  const double sigma = std::sqrt(sigma2);
  Image out = image;
  for (double& v : out.pixels) v = clip01(v + sigma * rng.gaussian());
  return out;
}

Image color_jitter(const Image& image, const ColorJitterRanges& ranges, Rng& rng) {
  if (!ranges.enabled()) return image;
  Image out = image;

  if (ranges.brightness > 0.0) {
    const double b = rng.uniform(-ranges.brightness, ranges.brightness);
    for (double& v : out.pixels) v = clip01(v + b);
  }
  if (ranges.contrast > 0.0) {
    const double c = rng.uniform(std::max(0.0, 1.0 - ranges.contrast), 1.0 + ranges.contrast);
    double mean[3] = {0, 0, 0};
    const std::size_t n = out.pixels.size() / 3;
    for (std::size_t i = 0; i < out.pixels.size(); i += 3)
      for (int ch = 0; ch < 3; ++ch) mean[ch] += out.pixels[i + static_cast<std::size_t>(ch)];
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < out.pixels.size(); i += 3)
      for (int ch = 0; ch < 3; ++ch) {
        auto& v = out.pixels[i + static_cast<std::size_t>(ch)];
        v = clip01(mean[ch] + c * (v - mean[ch]));
      }
  }
  if (ranges.saturation > 0.0) {
    const double s = rng.uniform(std::max(0.0, 1.0 - ranges.saturation), 1.0 + ranges.saturation);
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
      const Vec3 rgb{out.pixels[i], out.pixels[i + 1], out.pixels[i + 2]};
      const double lum = luminance(rgb);
      for (int ch = 0; ch < 3; ++ch)
        out.pixels[i + static_cast<std::size_t>(ch)] =
            clip01(lum + s * (rgb[static_cast<std::size_t>(ch)] - lum));
    }
  }
  if (ranges.hue_degrees > 0.0) {
    const double angle = rng.uniform(-ranges.hue_degrees, ranges.hue_degrees);
    // Same code path as watermarking: an adversarial learner jittering hue
    // applies exactly the transformation the user watermarks with.
    out = watermark_image(out, WatermarkKey{yiq_matrix(), angle});
  }
  return out;
}

Image AugmentationPipeline::apply(const Image& image, Rng& rng) const {
  Image out = random_crop(image, crop_pad, rng);
  if (flip) out = horizontal_flip(out, rng);
  if (cutout_size > 0) out = cutout(out, cutout_size, rng);
  if (jitter.enabled()) out = color_jitter(out, jitter, rng);
  if (gaussian_sigma2 > 0.0) out = gaussian_noise(out, gaussian_sigma2, rng);
  return out;
}

}  // namespace anw
