#pragma once

#include <string>

#include "anw/image.hpp"

namespace anw {

// Custom dataset container, little-endian throughout:
//   magic "ANW1" | u32 count | u32 height | u32 width | u32 channels (=3) |
//   u32 num_classes | count x u16 labels | count x H x W x 3 bytes,
//   image-major, row-major, RGB interleaved.
// Channel bytes map to reals as b / 255.
void write_dataset(const LabeledDataset& dataset, const std::string& path);
LabeledDataset read_dataset(const std::string& path);

// Public CIFAR-10 binary: 3073-byte records, 1 label byte then 3072
// channel-planar bytes (1024 R, 1024 G, 1024 B, row-major 32x32).
LabeledDataset read_cifar10(const std::string& path);

}  // namespace anw
