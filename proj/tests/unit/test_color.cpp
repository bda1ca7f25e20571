#include <doctest.h>

#include <cmath>
#include <set>

#include "anw/color.hpp"
#include "anw/error.hpp"
#include "anw/rng.hpp"

using namespace anw;

namespace {

double max_abs_diff(const Mat3& a, const Mat3& b) {
  double m = 0.0;
  for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
  return m;
}

Image gray_image(int h, int w, double v) {
  Image img(h, w);
  for (auto& p : img.pixels) p = v;
  return img;
}

}  // namespace

TEST_SUITE("color") {

TEST_CASE("yiq matrix rows are the published constants") {
  const ColorBasis yiq = yiq_matrix();
  CHECK(yiq.matrix[0] == 0.299);
  CHECK(yiq.matrix[1] == 0.587);
  CHECK(yiq.matrix[2] == 0.114);
  CHECK(yiq.matrix[3] == 0.596);
  CHECK(yiq.matrix[4] == -0.275);
  CHECK(yiq.matrix[5] == -0.321);
  CHECK(yiq.matrix[6] == 0.212);
  CHECK(yiq.matrix[7] == -0.523);
  CHECK(yiq.matrix[8] == 0.311);
}

TEST_CASE("yiq matrix times its inverse is the identity") {
  const ColorBasis yiq = yiq_matrix();
  CHECK(max_abs_diff(mat3_mul(yiq.matrix, yiq.inverse), mat3_identity()) < 1e-9);
}

TEST_CASE("gray pixels have no chroma") {
  const ColorBasis yiq = yiq_matrix();
  for (double c : {0.1, 0.5, 0.9}) {
    const Vec3 out = mat3_apply(yiq.matrix, {c, c, c});
    CHECK(std::abs(out[0] - c) < 1e-12);
    CHECK(std::abs(out[1]) < 1e-3 * c);
    CHECK(std::abs(out[2]) < 1e-3 * c);
  }
}

TEST_CASE("rotation at 0 is the identity") {
  CHECK(max_abs_diff(rotation_matrix(0.0), mat3_identity()) < 1e-15);
}

TEST_CASE("rotation at 180 flips the chroma plane") {
  const Mat3 r = rotation_matrix(180.0);
  const Mat3 expect{1, 0, 0, 0, -1, 0, 0, 0, -1};
  CHECK(max_abs_diff(r, expect) < 1e-12);
}

TEST_CASE("rotations compose additively") {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const double k1 = rng.uniform(-400, 400), k2 = rng.uniform(-400, 400);
    CHECK(max_abs_diff(mat3_mul(rotation_matrix(k1), rotation_matrix(k2)),
                       rotation_matrix(k1 + k2)) < 1e-9);
  }
}

TEST_CASE("lct at 0 is the identity within 1e-9") {
  const WatermarkKey key{yiq_matrix(), 0.0};
  CHECK(max_abs_diff(lct(key), mat3_identity()) < 1e-9);
}

TEST_CASE("lct of k and -k invert each other") {
  const ColorBasis yiq = yiq_matrix();
  for (double k : {17.0, 60.0, 200.0, 345.5}) {
    const Mat3 prod = mat3_mul(lct({yiq, k}), lct({yiq, -k}));
    CHECK(max_abs_diff(prod, mat3_identity()) < 1e-8);
  }
}

TEST_CASE("lct group law") {
  const ColorBasis yiq = yiq_matrix();
  CHECK(max_abs_diff(mat3_mul(lct({yiq, 50.0}), lct({yiq, 70.0})), lct({yiq, 120.0})) < 1e-8);
  CHECK(max_abs_diff(lct({yiq, 360.0}), lct({yiq, 0.0})) < 1e-8);
}

TEST_CASE("lct k=60 on the red pixel matches the exact-arithmetic oracle") {
  // Frozen from an independent symbolic computation of
  // T_YIQ . R(60 deg) . T_YIQ^-1 . (1,0,0)^T.
  const Vec3 out = mat3_apply(lct({yiq_matrix(), 60.0}), {1.0, 0.0, 0.0});
  CHECK(out[0] == doctest::Approx(0.23986998400996052).epsilon(1e-9));
  CHECK(out[1] == doctest::Approx(0.25816283142591582).epsilon(1e-9));
  CHECK(out[2] == doctest::Approx(0.82826518675622183).epsilon(1e-9));
}

TEST_CASE("lct k=60 drives some channels out of gamut as the oracle predicts") {
  // (0.25, 0.5, 0.75) maps to (-0.22880854, 0.94069064, 0.84299833) pre-clip.
  const Vec3 out = mat3_apply(lct({yiq_matrix(), 60.0}), {0.25, 0.5, 0.75});
  CHECK(out[0] == doctest::Approx(-0.22880854352958086).epsilon(1e-9));
  CHECK(out[1] == doctest::Approx(0.94069063511698951).epsilon(1e-9));
  CHECK(out[2] == doctest::Approx(0.84299832615052888).epsilon(1e-9));

  Image img(1, 1);
  img.pixels = {0.25, 0.5, 0.75};
  std::vector<std::uint8_t> mask;
  const Image marked = watermark_image(img, {yiq_matrix(), 60.0}, &mask);
  CHECK(marked.pixels[0] == 0.0);  // clipped
  CHECK(mask[0] == 1);
  CHECK(mask[1] == 0);
  CHECK(mask[2] == 0);
}

TEST_CASE("hue lct preserves luminance pre-clip") {
  const ColorBasis yiq = yiq_matrix();
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v{rng.next_double(), rng.next_double(), rng.next_double()};
    const double k = rng.uniform(0, 360);
    const Vec3 w = mat3_apply(lct({yiq, k}), v);
    CHECK(std::abs(luminance(w) - luminance(v)) < 1e-9);
  }
}

TEST_CASE("watermarking a gray image changes nothing") {
  const Image img = gray_image(4, 4, 0.5);
  const Image marked = watermark_image(img, {yiq_matrix(), 123.0});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(marked.pixels[i] - img.pixels[i]) < 1e-6);
}

TEST_CASE("k=0 watermark is the identity within 1e-6") {
  Rng rng(3);
  Image img(6, 5);
  for (auto& p : img.pixels) p = rng.next_double();
  const Image marked = watermark_image(img, {yiq_matrix(), 0.0});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(marked.pixels[i] - img.pixels[i]) < 1e-6);
}

TEST_CASE("rotate forward then back recovers the image away from saturation") {
  Rng rng(4);
  Image img(8, 8);
  for (auto& p : img.pixels) p = rng.next_double();

  // Unclipped round trip is exact to 1e-5 everywhere.
  const Mat3 fwd = lct({yiq_matrix(), 60.0});
  const Mat3 bwd = lct({yiq_matrix(), -60.0});
  const Image no_clip = apply_lct(apply_lct(img, fwd, false), bwd, false);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(no_clip.pixels[i] - img.pixels[i]) < 1e-5);

  // Clipped round trip differs only where the forward pass saturated a pixel.
  std::vector<std::uint8_t> mask;
  const Image clipped = apply_lct(img, fwd, true, &mask);
  const Image back = apply_lct(clipped, bwd, true);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    const bool pixel_saturated = mask[i] || mask[i + 1] || mask[i + 2];
    if (pixel_saturated) continue;
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(back.pixels[i + static_cast<std::size_t>(c)] -
                     img.pixels[i + static_cast<std::size_t>(c)]) < 1e-5);
  }
}

TEST_CASE("random user basis is reproducible and well-conditioned") {
  Rng a(9), b(9);
  const ColorBasis ba = random_user_basis(a);
  const ColorBasis bb = random_user_basis(b);
  CHECK(max_abs_diff(ba.matrix, bb.matrix) == 0.0);
  CHECK(std::abs(mat3_det(ba.matrix)) > 1e-3);
  CHECK(max_abs_diff(mat3_mul(ba.matrix, ba.inverse), mat3_identity()) < 1e-9);
}

TEST_CASE("det guard acceptance rate exceeds 99 percent") {
  Rng rng(10);
  int accepted = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    Mat3 m;
    for (auto& x : m) x = rng.uniform(-1.0, 1.0);
    if (std::abs(mat3_det(m)) > 1e-3) ++accepted;
  }
  CHECK(accepted > 990);
}

TEST_CASE("luminance weights") {
  CHECK(luminance({1, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(luminance({0, 0, 0}) == 0.0);
  CHECK(luminance({1, 0, 0}) == 0.299);
}

TEST_CASE("blue channel watermark replaces only listed pixels") {
  Image img = gray_image(4, 4, 1.0);
  BlueChannelKey key{0.5, {{1, 2}}, {1}};
  const Image marked = blue_channel_watermark(img, key);
  CHECK(marked.at(1, 2, 2) == doctest::Approx(0.5));  // L = 1 at white
  CHECK(marked.at(1, 2, 0) == 1.0);
  CHECK(marked.at(1, 2, 1) == 1.0);

  int touched = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    if (marked.pixels[i] != img.pixels[i]) ++touched;
  CHECK(touched == 1);
}

TEST_CASE("zero bit clips the blue channel to zero") {
  Image img = gray_image(2, 2, 0.8);
  BlueChannelKey key{0.5, {{0, 0}}, {0}};
  const Image marked = blue_channel_watermark(img, key);
  CHECK(marked.at(0, 0, 2) == 0.0);
}

TEST_CASE("blue channel watermark rejects out-of-bounds positions") {
  Image img = gray_image(2, 2, 0.5);
  BlueChannelKey key{0.5, {{2, 0}}, {1}};
  CHECK_THROWS_AS(blue_channel_watermark(img, key), std::invalid_argument);
}

TEST_CASE("random positions are unique, deterministic and bounded") {
  const auto a = random_positions(64, 64, 512, 77);
  const auto b = random_positions(64, 64, 512, 77);
  CHECK(a == b);
  CHECK(a.size() == 512);
  std::set<std::pair<int, int>> unique(a.begin(), a.end());
  CHECK(unique.size() == 512);
  for (const auto& [r, c] : a) {
    CHECK(r >= 0);
    CHECK(r < 64);
    CHECK(c >= 0);
    CHECK(c < 64);
  }
}

TEST_CASE("asking for every pixel yields a permutation") {
  const auto all = random_positions(8, 8, 64, 5);
  std::set<std::pair<int, int>> unique(all.begin(), all.end());
  CHECK(unique.size() == 64);
}

TEST_CASE("singular basis is rejected") {
  CHECK_THROWS_AS(ColorBasis::from_matrix({1, 2, 3, 2, 4, 6, 0, 0, 1}), std::invalid_argument);
}

}  // TEST_SUITE
