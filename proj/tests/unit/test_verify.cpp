#include <doctest.h>

#include <cmath>

#include "anw/rng.hpp"
#include "anw/synthetic.hpp"
#include "anw/verify.hpp"
#include "test_util.hpp"

using namespace anw;
using anw::testutil::central_difference;
using anw::testutil::rel_error;

namespace {

std::vector<Image> low_chroma_images(Rng& rng, int count, int h, int w) {
  // Near-gray pixels keep every hue rotation inside the gamut, so the
  // clipping mask stays empty and finite differences are clean.
  std::vector<Image> images;
  for (int i = 0; i < count; ++i) {
    Image img(h, w);
    for (auto& p : img.pixels) p = 0.5 + rng.uniform(-0.1, 0.1);
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("circular distance basics") {
  CHECK(circular_distance(60, 60) == 0.0);
  CHECK(circular_distance(350, 0) == doctest::Approx(10.0));
  CHECK(circular_distance(180, 0) == doctest::Approx(180.0));
  CHECK(circular_distance(-30, 30) == doctest::Approx(60.0));
  CHECK(circular_distance(720, 0) == doctest::Approx(0.0));
}

TEST_CASE("match rule mirrors the published examples") {
  CHECK(is_match(59.0, 60.0, 15.0));
  CHECK_FALSE(is_match(17.0, 60.0, 15.0));
  CHECK(is_match(350.0, 0.0, 15.0));
  CHECK_FALSE(is_match(75.0, 60.0, 15.0));  // boundary is strict
}

TEST_CASE("signature space tiles the circle") {
  const SignatureSpace space = SignatureSpace::make(12, 15.0);
  const auto cands = space.candidates();
  REQUIRE(cands.size() == 12);
  for (int i = 0; i < 12; ++i) CHECK(cands[static_cast<std::size_t>(i)] == doctest::Approx(30.0 * i));
  CHECK(space.watermark_candidates().size() == 11);
  CHECK(space.watermark_candidates().front() == doctest::Approx(30.0));

  CHECK_THROWS_AS(SignatureSpace::make(12, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(SignatureSpace::make(0, 15.0), std::invalid_argument);
}

TEST_CASE("constant-logit model ties break to the no-watermark slot") {
  Classifier net = build_tiny_cnn({3, 8, 8}, 4, 3, 4);
  net.layers.back().weight.fill(0.0);
  net.layers.back().bias.fill(0.0);

  Rng rng(5);
  const auto images = low_chroma_images(rng, 3, 8, 8);
  const VerificationReport report =
      grid_search(net, images, {0, 1, 2}, yiq_matrix(), SignatureSpace::make(12, 15.0));
  CHECK(report.inferred == 0.0);
  CHECK(report.per_candidate_losses.size() == 12);
  for (const auto& cl : report.per_candidate_losses)
    CHECK(cl.loss == report.per_candidate_losses[0].loss);
}

TEST_CASE("grid winner attains the reported minimum") {
  const Classifier net = build_tiny_cnn({3, 8, 8}, 4, 7, 4);
  Rng rng(6);
  const auto images = low_chroma_images(rng, 4, 8, 8);
  const VerificationReport report =
      grid_search(net, images, {0, 1, 2, 3}, yiq_matrix(), SignatureSpace::make(12, 15.0));
  double min_loss = report.per_candidate_losses[0].loss;
  for (const auto& cl : report.per_candidate_losses) min_loss = std::min(min_loss, cl.loss);
  double winner_loss = 0.0;
  for (const auto& cl : report.per_candidate_losses)
    if (cl.k == report.inferred) winner_loss = cl.loss;
  CHECK(winner_loss == min_loss);
}

TEST_CASE("signature gradient matches finite differences without saturation") {
  const Classifier net = build_tiny_cnn({3, 8, 8}, 5, 11, 4);
  Rng rng(7);
  const auto images = low_chroma_images(rng, 4, 8, 8);
  const std::vector<int> labels{0, 1, 2, 3};
  const ColorBasis basis = yiq_matrix();
  const EvalContext eval;

  for (double k : {10.0, 45.0, 137.0, 300.0}) {
    double analytic = 0.0;
    signature_loss(net, images, labels, basis, k, eval, &analytic);
    const double fd = central_difference(
        [&](double kk) { return signature_loss(net, images, labels, basis, kk, eval); }, k, 1e-3);
    CHECK(rel_error(analytic, fd) < 1e-3);
  }
}

TEST_CASE("signature gradient matches finite differences with clipping active") {
  const Classifier net = build_tiny_cnn({3, 8, 8}, 5, 13, 4);
  Rng rng(8);
  std::vector<Image> images;
  for (int i = 0; i < 3; ++i) {
    Image img(8, 8);
    for (auto& p : img.pixels) p = rng.next_double();  // full range: clipping occurs
    images.push_back(std::move(img));
  }
  const std::vector<int> labels{0, 1, 2};
  const ColorBasis basis = yiq_matrix();
  const EvalContext eval;

  // Generic angles sit away from clip kinks; the straight-through gradient
  // is then the true derivative of the clipped pipeline.
  for (double k : {60.37, 211.13}) {
    double analytic = 0.0;
    signature_loss(net, images, labels, basis, k, eval, &analytic);
    const double fd = central_difference(
        [&](double kk) { return signature_loss(net, images, labels, basis, kk, eval); }, k, 1e-4);
    CHECK(rel_error(analytic, fd) < 1e-3);
  }
}

TEST_CASE("gradient search stays at its start when the learning rate is zero") {
  const Classifier net = build_tiny_cnn({3, 8, 8}, 4, 17, 4);
  Rng rng(9);
  const auto images = low_chroma_images(rng, 3, 8, 8);
  GradientSchedule schedule;
  schedule.base_lr = 0.0;
  schedule.iterations = 5;
  const VerificationReport report =
      gradient_search(net, images, {0, 1, 2}, yiq_matrix(), {60.0}, schedule);
  CHECK(report.inferred == doctest::Approx(60.0));
  CHECK(report.method == SearchMethod::Gradient);
}

TEST_CASE("the claimed signature never steers the search") {
  const Classifier net = build_tiny_cnn({3, 8, 8}, 4, 19, 4);
  Rng rng(10);
  const auto images = low_chroma_images(rng, 3, 8, 8);
  const std::vector<int> labels{0, 1, 2};
  const SignatureSpace space = SignatureSpace::make(12, 15.0);

  const VerificationReport a =
      verify(net, images, labels, yiq_matrix(), space, SearchMethod::Grid, 60.0);
  const VerificationReport b =
      verify(net, images, labels, yiq_matrix(), space, SearchMethod::Grid, 90.0);
  const VerificationReport c =
      verify(net, images, labels, yiq_matrix(), space, SearchMethod::Grid, std::nullopt);

  CHECK(a.inferred == b.inferred);
  CHECK(a.inferred == c.inferred);
  REQUIRE(a.per_candidate_losses.size() == b.per_candidate_losses.size());
  for (std::size_t i = 0; i < a.per_candidate_losses.size(); ++i)
    CHECK(a.per_candidate_losses[i].loss == b.per_candidate_losses[i].loss);
  CHECK(a.matched.has_value());
  CHECK(b.matched.has_value());
  CHECK_FALSE(c.matched.has_value());
}

TEST_CASE("alpha grid search reports the blue domain and a linear match") {
  const Classifier net = build_tiny_cnn({3, 8, 8}, 4, 23, 4);
  Rng rng(11);
  const auto images = low_chroma_images(rng, 3, 8, 8);
  const auto positions = random_positions(8, 8, 16, 3);
  std::vector<std::uint8_t> bits(16, 1);

  const VerificationReport report = grid_search_alpha(
      net, images, {0, 1, 2}, positions, bits, {0.1, 0.2, 0.3}, 0.1, {}, 0.2);
  CHECK(report.domain == "blue_alpha");
  CHECK(report.per_candidate_losses.size() == 3);
  CHECK(report.matched.has_value());
}

}  // TEST_SUITE
