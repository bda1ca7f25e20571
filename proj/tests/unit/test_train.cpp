#include <doctest.h>

#include <chrono>
#include <cmath>

#include "anw/rng.hpp"
#include "anw/synthetic.hpp"
#include "anw/train.hpp"

using namespace anw;

namespace {

TrainConfig small_config() {
  TrainConfig tc;
  tc.epochs = 3;
  tc.base_lr = 0.05;
  tc.lr_decay_every = 2;
  tc.batch_size = 16;
  tc.seed = 9;
  tc.crop_pad = 2;
  tc.conv_width = 8;
  return tc;
}

bool weights_equal(const Classifier& a, const Classifier& b) {
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight.data != b.layers[i].weight.data) return false;
    if (a.layers[i].bias.data != b.layers[i].bias.data) return false;
  }
  return true;
}

// Shared trained fixture for the fgsm checks.
const TrainResult& trained_fixture() {
  static const TrainResult result = [] {
    const LabeledDataset ds = generate_synthetic(200, 16, 16, 4, 3);
    TrainConfig tc = small_config();
    tc.epochs = 12;
    tc.lr_decay_every = 5;
    return train(ds, {}, tc);
  }();
  return result;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const LabeledDataset ds = generate_synthetic(96, 16, 16, 4, 11);
  const TrainResult a = train(ds, {}, small_config());
  const TrainResult b = train(ds, {}, small_config());
  CHECK(weights_equal(a.model, b.model));
  CHECK(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("learning rate follows the step schedule") {
  const LabeledDataset ds = generate_synthetic(32, 16, 16, 4, 12);
  TrainConfig tc = small_config();
  tc.epochs = 5;
  tc.base_lr = 0.1;
  tc.lr_decay_factor = 0.1;
  tc.lr_decay_every = 2;
  const TrainResult r = train(ds, {}, tc);
  CHECK(r.log[0].lr == doctest::Approx(0.1));
  CHECK(r.log[1].lr == doctest::Approx(0.1));
  CHECK(r.log[2].lr == doctest::Approx(0.01));
  CHECK(r.log[4].lr == doctest::Approx(0.001));
}

TEST_CASE("a 100-image synthetic dataset is learnable above 80 percent held-out") {
  const auto start = std::chrono::steady_clock::now();

  const LabeledDataset full = generate_synthetic(100, 32, 32, 10, 1);
  LabeledDataset train_ds, eval_ds;
  train_ds.num_classes = eval_ds.num_classes = 10;
  for (std::size_t i = 0; i < full.size(); ++i) {
    auto& target = (i % 5 == 4) ? eval_ds : train_ds;  // 80/20 split
    target.images.push_back(full.images[i]);
    target.labels.push_back(full.labels[i]);
  }

  TrainConfig tc;
  tc.epochs = 40;
  tc.base_lr = 0.05;
  tc.lr_decay_factor = 0.1;
  tc.lr_decay_every = 25;
  tc.batch_size = 16;
  tc.seed = 2;
  tc.crop_pad = 2;
  const TrainResult r = train(train_ds, {}, tc);

  const double acc =
      accuracy(r.model, normalized_batch(eval_ds.images, tc.normalization), eval_ds.labels);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(acc > 0.8);
  CHECK(secs < 120.0);
}

TEST_CASE("watermarked user images reach lower loss than their clean versions") {
  const LabeledDataset ds = generate_synthetic(800, 32, 32, 10, 21);
  UserPartition user{0, {}};
  for (std::size_t i = 0; i < 8; ++i) user.indices.push_back(i * 97);  // ~1%
  const WatermarkKey key{yiq_matrix(), 60.0};

  TrainConfig tc;
  tc.epochs = 12;
  tc.base_lr = 0.05;
  tc.lr_decay_every = 8;
  tc.batch_size = 32;
  tc.seed = 5;
  const TrainResult r = train(ds, {{user, key, std::nullopt}}, tc);

  std::vector<Image> clean, marked;
  std::vector<int> labels;
  for (std::size_t idx : user.indices) {
    clean.push_back(ds.images[idx]);
    marked.push_back(watermark_image(ds.images[idx], key));
    labels.push_back(ds.labels[idx]);
  }
  const double marked_loss =
      average_loss(r.model, normalized_batch(marked, tc.normalization), labels);
  const double clean_loss =
      average_loss(r.model, normalized_batch(clean, tc.normalization), labels);
  CHECK(marked_loss < clean_loss);
}

TEST_CASE("empty dataset is rejected") {
  CHECK_THROWS_AS(train({}, {}, small_config()), std::invalid_argument);
}

TEST_CASE("fgsm with zero epsilon returns the image unchanged") {
  const auto& fixture = trained_fixture();
  const LabeledDataset ds = generate_synthetic(4, 16, 16, 4, 33);
  const Image out =
      fgsm_perturb(fixture.model, NormalizationSpec::cifar(), ds.images[0], ds.labels[0], 0.0);
  CHECK(out.pixels == ds.images[0].pixels);
}

TEST_CASE("fgsm output stays in range and raises loss for most examples") {
  const auto& fixture = trained_fixture();
  const LabeledDataset ds = generate_synthetic(40, 16, 16, 4, 34);
  const NormalizationSpec norm = NormalizationSpec::cifar();

  int increased = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Image adv = fgsm_perturb(fixture.model, norm, ds.images[i], ds.labels[i], 0.01);
    for (double p : adv.pixels) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    const double before =
        average_loss(fixture.model, normalized_batch({ds.images[i]}, norm), {ds.labels[i]});
    const double after = average_loss(fixture.model, normalized_batch({adv}, norm), {ds.labels[i]});
    if (after >= before) ++increased;
  }
  CHECK(increased >= 36);  // >= 90%
}

TEST_CASE("fine-tuning at lr zero is a no-op on the weights") {
  const auto& fixture = trained_fixture();
  const LabeledDataset ds = generate_synthetic(50, 16, 16, 4, 35);
  const Classifier tuned = fine_tune(fixture.model, ds, 1, 0.0, small_config());
  CHECK(weights_equal(tuned, fixture.model));
}

TEST_CASE("watermark assignments only touch listed indices") {
  const LabeledDataset ds = generate_synthetic(20, 16, 16, 4, 36);
  UserPartition user{0, {3, 7}};
  const LabeledDataset marked = apply_assignments(ds, {{user, WatermarkKey{yiq_matrix(), 90.0},
                                                        std::nullopt}});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool listed = (i == 3 || i == 7);
    CHECK((marked.images[i].pixels != ds.images[i].pixels) == listed);
  }
}

}  // TEST_SUITE
