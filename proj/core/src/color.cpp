#include "anw/color.hpp"

#include <cmath>
#include <stdexcept>

#include "anw/error.hpp"

namespace anw {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDetFloor = 1e-6;

}  // namespace

Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[static_cast<std::size_t>(i * 3 + k)] * b[static_cast<std::size_t>(k * 3 + j)];
      c[static_cast<std::size_t>(i * 3 + j)] = s;
    }
  return c;
}

Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

double mat3_det(const Mat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 mat3_inverse(const Mat3& m) {
  const double det = mat3_det(m);
  if (std::abs(det) <= kDetFloor)
    throw std::invalid_argument("mat3_inverse: matrix is singular or near-singular");
  const double inv = 1.0 / det;
  Mat3 r;
  r[0] = (m[4] * m[8] - m[5] * m[7]) * inv;
  r[1] = (m[2] * m[7] - m[1] * m[8]) * inv;
  r[2] = (m[1] * m[5] - m[2] * m[4]) * inv;
  r[3] = (m[5] * m[6] - m[3] * m[8]) * inv;
  r[4] = (m[0] * m[8] - m[2] * m[6]) * inv;
  r[5] = (m[2] * m[3] - m[0] * m[5]) * inv;
  r[6] = (m[3] * m[7] - m[4] * m[6]) * inv;
  r[7] = (m[1] * m[6] - m[0] * m[7]) * inv;
  r[8] = (m[0] * m[4] - m[1] * m[3]) * inv;
  return r;
}

ColorBasis ColorBasis::from_matrix(const Mat3& m) {
  ColorBasis basis;
  basis.matrix = m;
  basis.inverse = mat3_inverse(m);
  return basis;
}

ColorBasis yiq_matrix() {
  return ColorBasis::from_matrix({0.299, 0.587, 0.114,     //
                                  0.596, -0.275, -0.321,   //
                                  0.212, -0.523, 0.311});
}

Mat3 rotation_matrix(double k_degrees) {
  const double theta = k_degrees * kPi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  return {1, 0, 0,   //
          0, c, -s,  //
          0, s, c};
}

Mat3 lct(const WatermarkKey& key) {
  return mat3_mul(key.basis.matrix, mat3_mul(rotation_matrix(key.signature_degrees), key.basis.inverse));
}

Mat3 lct_derivative(const WatermarkKey& key) {
  const double theta = key.signature_degrees * kPi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const Mat3 dT = {0, 0, 0,   //
                   0, -s, -c,  //
                   0, c, -s};
  Mat3 m = mat3_mul(key.basis.matrix, mat3_mul(dT, key.basis.inverse));
  for (double& x : m) x *= kPi / 180.0;
  return m;
}

Image apply_lct(const Image& image, const Mat3& transform, bool clip,
                std::vector<std::uint8_t>* clip_mask) {
  Image out(image.height, image.width);
  const std::size_t n = image.pixels.size();
  if (clip_mask) clip_mask->assign(n, 0);
  for (std::size_t i = 0; i < n; i += 3) {
    const Vec3 v{image.pixels[i], image.pixels[i + 1], image.pixels[i + 2]};
    Vec3 w = mat3_apply(transform, v);
    for (int c = 0; c < 3; ++c) {
      double x = w[static_cast<std::size_t>(c)];
      if (clip) {
        if (x < 0.0) {
          x = 0.0;
          if (clip_mask) (*clip_mask)[i + static_cast<std::size_t>(c)] = 1;
        } else if (x > 1.0) {
          x = 1.0;
          if (clip_mask) (*clip_mask)[i + static_cast<std::size_t>(c)] = 1;
        }
      }
      out.pixels[i + static_cast<std::size_t>(c)] = x;
    }
  }
  return out;
}

Image watermark_image(const Image& image, const WatermarkKey& key,
                      std::vector<std::uint8_t>* clip_mask) {
  return apply_lct(image, lct(key), /*clip=*/true, clip_mask);
}

ColorBasis random_user_basis(Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Mat3 m;
    for (double& x : m) x = rng.uniform(-1.0, 1.0);
    if (std::abs(mat3_det(m)) > 1e-3) return ColorBasis::from_matrix(m);
  }
  throw NumericalError("random_user_basis: no well-conditioned matrix in 1000 attempts");
}

double luminance(const Vec3& rgb) { return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]; }

Image blue_channel_watermark(const Image& image, const BlueChannelKey& key) {
  if (key.positions.size() != key.bits.size())
    throw std::invalid_argument("blue_channel_watermark: positions and bits differ in length");
  Image out = image;
  for (std::size_t t = 0; t < key.positions.size(); ++t) {
    const auto [row, col] = key.positions[t];
    if (row < 0 || row >= image.height || col < 0 || col >= image.width)
      throw std::invalid_argument("blue_channel_watermark: position out of bounds");
    const Vec3 v{image.at(row, col, 0), image.at(row, col, 1), image.at(row, col, 2)};
    const double sign = key.bits[t] ? 1.0 : -1.0;
    double b = sign * key.alpha * luminance(v);
    if (b < 0.0) b = 0.0;
    if (b > 1.0) b = 1.0;
    out.at(row, col, 2) = b;
  }
  return out;
}

std::vector<std::pair<int, int>> random_positions(int height, int width, int count,
                                                  std::uint64_t seed) {
  const std::int64_t total = static_cast<std::int64_t>(height) * width;
  if (count < 0 || static_cast<std::int64_t>(count) > total)
    throw std::invalid_argument("random_positions: count exceeds pixel count");
  std::vector<std::int64_t> order(static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::pair<int, int>> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::int64_t flat = order[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = {static_cast<int>(flat / width), static_cast<int>(flat % width)};
  }
  return out;
}

}  // namespace anw
