#pragma once

#include <cstdint>

#include "anw/image.hpp"

namespace anw {

// Procedural dataset where the class is carried by shape and color is
// per-image random noise. A hue transform therefore never changes the label,
// while still changing something the classifier sees. Pixels land on the
// 8-bit grid so disk round-trips are exact.
LabeledDataset generate_synthetic(int num_images, int height, int width, int num_classes,
                                  std::uint64_t seed);

}  // namespace anw
