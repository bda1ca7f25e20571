#include <doctest.h>

#include <cmath>

#include "anw/augment.hpp"
#include "anw/rng.hpp"

using namespace anw;

namespace {

Image random_image(Rng& rng, int h, int w) {
  Image img(h, w);
  for (auto& p : img.pixels) p = rng.next_double();
  return img;
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("crop with zero pad is the identity") {
  Rng rng(1);
  const Image img = random_image(rng, 8, 8);
  Rng crop_rng(2);
  const Image out = random_crop(img, 0, crop_rng);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("crop preserves dimensions and is seed-deterministic") {
  Rng rng(3);
  const Image img = random_image(rng, 10, 12);
  Rng a(7), b(7);
  const Image out1 = random_crop(img, 4, a);
  const Image out2 = random_crop(img, 4, b);
  CHECK(out1.height == 10);
  CHECK(out1.width == 12);
  CHECK(out1.pixels == out2.pixels);
}

TEST_CASE("forced double flip is the identity") {
  Rng rng(4);
  const Image img = random_image(rng, 6, 9);
  CHECK(flip_columns(flip_columns(img)).pixels == img.pixels);
}

TEST_CASE("a column-symmetric image is flip-invariant") {
  Image img(4, 6);
  Rng rng(5);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = rng.next_double();
        img.at(y, x, c) = v;
        img.at(y, 5 - x, c) = v;
      }
  CHECK(flip_columns(img).pixels == img.pixels);
}

TEST_CASE("horizontal flip fires about half the time") {
  Rng rng(6);
  const Image img = random_image(rng, 4, 4);
  Rng flip_rng(8);
  int flipped = 0;
  for (int i = 0; i < 1000; ++i) {
    const Image out = horizontal_flip(img, flip_rng);
    if (out.pixels != img.pixels) ++flipped;
  }
  CHECK(flipped > 400);
  CHECK(flipped < 600);
}

TEST_CASE("cutout zero size is the identity, window bounded by M^2") {
  Rng rng(9);
  const Image img = random_image(rng, 16, 16);
  Rng cut_rng(10);
  CHECK(cutout(img, 0, cut_rng).pixels == img.pixels);

  for (int rep = 0; rep < 50; ++rep) {
    const Image out = cutout(img, 8, cut_rng);
    int zeroed = 0;
    for (std::size_t i = 0; i < img.pixels.size(); i += 3)
      if (out.pixels[i] == 0.0 && out.pixels[i + 1] == 0.0 && out.pixels[i + 2] == 0.0) ++zeroed;
    CHECK(zeroed <= 64);
    CHECK(zeroed > 0);
  }
}

TEST_CASE("gaussian noise keeps range and hits the requested variance") {
  Rng rng(11);
  Image img(184, 184);
  for (auto& p : img.pixels) p = 0.5;

  Rng noise_rng(12);
  CHECK(gaussian_noise(img, 0.0, noise_rng).pixels == img.pixels);

  const double sigma2 = 0.01;  // 5 sigma from the clip boundaries at 0.5
  const Image out = gaussian_noise(img, sigma2, noise_rng);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double d = out.pixels[i] - img.pixels[i];
    sum += d;
    sum2 += d * d;
    CHECK(out.pixels[i] >= 0.0);
    CHECK(out.pixels[i] <= 1.0);
  }
  const double n = static_cast<double>(img.pixels.size());
  const double var = sum2 / n - (sum / n) * (sum / n);
  CHECK(std::abs(var - sigma2) < 0.1 * sigma2);
}

TEST_CASE("jitter with zero ranges is the identity") {
  Rng rng(13);
  const Image img = random_image(rng, 8, 8);
  Rng jit_rng(14);
  CHECK(color_jitter(img, {}, jit_rng).pixels == img.pixels);
}

TEST_CASE("hue-only jitter equals the watermark transform at the drawn angle") {
  Rng rng(15);
  const Image img = random_image(rng, 8, 8);
  Rng a(16), b(16);
  const Image jittered = color_jitter(img, {0.0, 0.0, 0.0, 288.0}, a);
  const double angle = b.uniform(-288.0, 288.0);
  const Image marked = watermark_image(img, WatermarkKey{yiq_matrix(), angle});
  CHECK(jittered.pixels == marked.pixels);
}

TEST_CASE("every augmentation maps [0,1] into [0,1]") {
  Rng rng(17);
  AugmentationPipeline pipeline;
  pipeline.crop_pad = 4;
  pipeline.flip = true;
  pipeline.cutout_size = 8;
  pipeline.jitter = {0.4, 0.4, 0.4, 288.0};
  pipeline.gaussian_sigma2 = 0.1;

  for (int rep = 0; rep < 30; ++rep) {
    const Image img = random_image(rng, 16, 16);
    Rng aug_rng(Rng::derive(99, static_cast<std::uint64_t>(rep)));
    const Image out = pipeline.apply(img, aug_rng);
    CHECK(out.height == 16);
    CHECK(out.width == 16);
    for (double p : out.pixels) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("pipeline is deterministic given the rng state") {
  Rng rng(18);
  const Image img = random_image(rng, 12, 12);
  AugmentationPipeline pipeline;
  pipeline.crop_pad = 2;
  pipeline.flip = true;
  pipeline.cutout_size = 4;
  pipeline.gaussian_sigma2 = 0.05;
  Rng a(21), b(21);
  CHECK(pipeline.apply(img, a).pixels == pipeline.apply(img, b).pixels);
}

}  // TEST_SUITE
