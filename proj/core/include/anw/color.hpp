#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "anw/image.hpp"
#include "anw/rng.hpp"

namespace anw {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Vec3 mat3_apply(const Mat3& m, const Vec3& v);
double mat3_det(const Mat3& m);
// Adjugate inverse; throws std::invalid_argument when |det| <= 1e-6.
Mat3 mat3_inverse(const Mat3& m);

// A chroma basis: the change-of-basis matrix whose rows define a luminance
// axis plus a two-dimensional chroma plane, with its cached inverse.
struct ColorBasis {
  Mat3 matrix = mat3_identity();
  Mat3 inverse = mat3_identity();

  static ColorBasis from_matrix(const Mat3& m);
};

// The RGB->YIQ matrix. Hue lives in the (I, Q) plane.
ColorBasis yiq_matrix();

// Rotation of the chroma plane by k degrees; the first coordinate is fixed.
Mat3 rotation_matrix(double k_degrees);

// A user's watermark: the chroma basis plus a private hue angle in degrees
// (interpreted modulo 360).
struct WatermarkKey {
  ColorBasis basis;
  double signature_degrees = 0.0;
};

// g_k = B * T_k * B^-1, the per-pixel linear color transformation.
Mat3 lct(const WatermarkKey& key);

// d g_k / dk in units of 1/degree: B * dT/dtheta * B^-1 * (pi/180).
Mat3 lct_derivative(const WatermarkKey& key);

// Apply a linear color transform to every pixel. With clip=true the result
// is clamped into [0,1]; clip_mask (when non-null) is resized to
// height*width*3 and records which channel values saturated.
Image apply_lct(const Image& image, const Mat3& transform, bool clip,
                std::vector<std::uint8_t>* clip_mask = nullptr);

// clip([0,1], g_k v) for every pixel. Labels are untouched by contract.
Image watermark_image(const Image& image, const WatermarkKey& key,
                      std::vector<std::uint8_t>* clip_mask = nullptr);

// Entries i.i.d. uniform in (-1,1); the whole matrix is resampled until
// |det| > 1e-3 (at most 1000 attempts).
ColorBasis random_user_basis(Rng& rng);

// 0.299 R + 0.587 G + 0.114 B.
double luminance(const Vec3& rgb);

// The partial-pixel variant: the blue channel of each listed pixel is
// replaced by clip((2 w_t - 1) * alpha * luminance).
struct BlueChannelKey {
  double alpha = 0.0;                             // intensity in (0,1]
  std::vector<std::pair<int, int>> positions;     // (row, col), unique
  std::vector<std::uint8_t> bits;                 // one bit per position
};

Image blue_channel_watermark(const Image& image, const BlueChannelKey& key);

// Unique pixel coordinates, deterministic in seed.
std::vector<std::pair<int, int>> random_positions(int height, int width, int count,
                                                  std::uint64_t seed);

}  // namespace anw
