#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "anw/tensor.hpp"

namespace anw {

// RGB image with channels in [0,1], stored interleaved (row-major, RGB).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // height * width * 3

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0.0) {}

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

struct LabeledDataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return images.size(); }
};

struct UserPartition {
  int user_id = 0;
  std::vector<std::size_t> indices;
};

struct NormalizationSpec {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  // (0.5, 0.5, 0.5) / (0.5, 0.5, 0.5), the small-image default.
  static NormalizationSpec cifar() { return {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}}; }
  static NormalizationSpec identity() { return {}; }
};

// Per channel: (value - mean) / std. Output layout is planar (3, H, W) ready
// for the classifier.
Tensor normalize(const Image& image, const NormalizationSpec& spec);

// Inverse of normalize; test and tooling helper.
Image denormalize(const Tensor& chw, const NormalizationSpec& spec);

// Pack already-clean images into a (B, 3, H, W) batch, normalizing each.
Tensor normalized_batch(const std::vector<Image>& images, const NormalizationSpec& spec);

// Deterministic shuffle-split of [0, dataset_size) into num_users partitions
// whose sizes differ by at most one. Union covers the dataset.
std::vector<UserPartition> split_users(std::size_t dataset_size, int num_users,
                                       std::uint64_t seed);

// Quantize channels to the 8-bit grid used on disk (round to nearest 1/255).
void quantize_to_u8_grid(Image& image);

}  // namespace anw
