#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "anw/augment.hpp"
#include "anw/classifier.hpp"
#include "anw/color.hpp"
#include "anw/image.hpp"

namespace anw {

struct TrainConfig {
  int epochs = 30;
  double base_lr = 0.1;
  double lr_decay_factor = 0.1;
  int lr_decay_every = 10;  // epochs
  double momentum = 0.9;
  int batch_size = 64;
  std::uint64_t seed = 0;

  // Augmentations (crop + flip are the always-on defaults of the recipe).
  int crop_pad = 4;
  bool horizontal_flip = true;
  int cutout_size = 0;
  double label_smoothing = 0.0;
  double gaussian_sigma2 = 0.0;
  double fgsm_epsilon = 0.0;
  ColorJitterRanges jitter;

  // Inference-time output-confidence noise. Recorded with the run and applied
  // by evaluation code, never by the SGD loop itself.
  double dp_sigma2 = 0.0;

  NormalizationSpec normalization = NormalizationSpec::cifar();
  int conv_width = 16;  // capacity knob: first conv channels, second is 2x

  void validate() const;
};

// Maps one user partition to its watermark (if any). Watermarking happens
// once, when the training copy of the dataset is materialized.
struct WatermarkAssignment {
  UserPartition partition;
  std::optional<WatermarkKey> hue;
  std::optional<BlueChannelKey> blue;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  Classifier model;
  std::vector<EpochStats> log;
};

// Watermark the assigned slices, then run SGD with momentum and step decay.
// Deterministic in config.seed: shuffles, augmentation draws and init all
// derive from it.
TrainResult train(const LabeledDataset& dataset,
                  const std::vector<WatermarkAssignment>& assignments, const TrainConfig& config);

// Apply the configured per-user watermarks to a copy of the dataset.
LabeledDataset apply_assignments(const LabeledDataset& dataset,
                                 const std::vector<WatermarkAssignment>& assignments);

// Continue SGD on a clean dataset at a fixed low learning rate. Augmentation
// and normalization follow `config`; epochs/lr arguments take precedence.
Classifier fine_tune(const Classifier& net, const LabeledDataset& dataset, int epochs, double lr,
                     const TrainConfig& config);

// image + epsilon * sign(dL/dinput), clipped to [0,1]. The classifier sees
// normalize(image, spec); the sign is unaffected by the positive std scaling.
Image fgsm_perturb(const Classifier& net, const NormalizationSpec& spec, const Image& image,
                   int label, double epsilon);

}  // namespace anw
