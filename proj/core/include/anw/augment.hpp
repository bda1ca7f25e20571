#pragma once

#include "anw/color.hpp"
#include "anw/image.hpp"
#include "anw/rng.hpp"

namespace anw {

// Zero-pad by `pad` on every side, then crop a random window back to the
// original size. pad 0 is the identity and consumes no randomness.
Image random_crop(const Image& image, int pad, Rng& rng);

// Mirror columns with probability 0.5.
Image horizontal_flip(const Image& image, Rng& rng);

// Unconditional column mirror.
Image flip_columns(const Image& image);

// Zero an M x M window (clipped at the borders) at a random center.
Image cutout(const Image& image, int size, Rng& rng);

// Add N(0, sigma2) per channel value, clip to [0,1].
Image gaussian_noise(const Image& image, double sigma2, Rng& rng);

struct ColorJitterRanges {
  double brightness = 0.0;   // additive shift drawn from [-b, b]
  double contrast = 0.0;     // scale drawn from [1-c, 1+c] around the per-image mean
  double saturation = 0.0;   // blend factor drawn from [1-s, 1+s] toward luminance
  double hue_degrees = 0.0;  // rotation angle drawn from [-h, h]

  bool enabled() const {
    return brightness > 0.0 || contrast > 0.0 || saturation > 0.0 || hue_degrees > 0.0;
  }
};

// Brightness, contrast, saturation, then a hue rotation through the same LCT
// used for watermarking. Result is clipped.
Image color_jitter(const Image& image, const ColorJitterRanges& ranges, Rng& rng);

// The fixed training-time pipeline: crop -> flip -> cutout -> jitter -> noise.
struct AugmentationPipeline {
  int crop_pad = 0;
  bool flip = false;
  int cutout_size = 0;
  ColorJitterRanges jitter;
  double gaussian_sigma2 = 0.0;

  Image apply(const Image& image, Rng& rng) const;
};

}  // namespace anw
