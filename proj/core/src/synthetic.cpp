#include "anw/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "anw/color.hpp"
#include "anw/rng.hpp"

namespace anw {
namespace {

// Ten high-contrast silhouettes; classes beyond ten reuse them at a smaller
// scale. dy/dx are offsets from the shape center, r its nominal radius.
bool inside_shape(int shape, double dy, double dx, double r) {
  const double d2 = dy * dy + dx * dx;
  switch (shape) {
    case 0:  // disc
      return d2 <= r * r;
    case 1:  // square
      return std::abs(dy) <= 0.85 * r && std::abs(dx) <= 0.85 * r;
    case 2:  // triangle, apex up
      return dy >= -r && dy <= 0.8 * r && std::abs(dx) <= (dy + r) / 1.8;
    case 3:  // ring
      return d2 >= 0.30 * r * r && d2 <= r * r;
    case 4:  // plus
      return (std::abs(dx) <= 0.33 * r && std::abs(dy) <= r) ||
             (std::abs(dy) <= 0.33 * r && std::abs(dx) <= r);
    case 5:  // diamond
      return std::abs(dx) + std::abs(dy) <= 1.2 * r;
    case 6:  // horizontal bar
      return std::abs(dy) <= 0.35 * r && std::abs(dx) <= r;
    case 7:  // vertical bar
      return std::abs(dx) <= 0.35 * r && std::abs(dy) <= r;
    case 8:  // X
      return std::abs(std::abs(dx) - std::abs(dy)) <= 0.3 * r && std::abs(dx) <= r &&
             std::abs(dy) <= r;
    default:  // hollow square frame
      return std::max(std::abs(dx), std::abs(dy)) <= 0.9 * r &&
             std::max(std::abs(dx), std::abs(dy)) >= 0.5 * r;
  }
}

Vec3 random_color(Rng& rng) { return {rng.next_double(), rng.next_double(), rng.next_double()}; }

}  // namespace

LabeledDataset generate_synthetic(int num_images, int height, int width, int num_classes,
                                  std::uint64_t seed) {
  if (num_images <= 0 || num_classes <= 0)
    throw std::invalid_argument("generate_synthetic: counts must be positive");
  if (height < 8 || width < 8)
    throw std::invalid_argument("generate_synthetic: dimensions must be at least 8");

  LabeledDataset ds;
  ds.num_classes = num_classes;
  ds.images.reserve(static_cast<std::size_t>(num_images));
  ds.labels.reserve(static_cast<std::size_t>(num_images));

  for (int i = 0; i < num_images; ++i) {
    const int label = i % num_classes;
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));

    Vec3 bg = random_color(rng);
    Vec3 fg = random_color(rng);
    // Keep the silhouette visible regardless of the sampled colors.
    for (int attempt = 0; attempt < 20 && std::abs(luminance(fg) - luminance(bg)) < 0.35;
         ++attempt) {
      fg = random_color(rng);
    }
    if (std::abs(luminance(fg) - luminance(bg)) < 0.35) {
      const bool dark_bg = luminance(bg) < 0.5;
      for (auto& ch : fg) ch = dark_bg ? rng.uniform(0.75, 1.0) : rng.uniform(0.0, 0.25);
    }

    const int shape = label % 10;
    const double tier_scale = 1.0 / (1.0 + 0.25 * (label / 10));
    const double r = 0.5 * std::min(height, width) * rng.uniform(0.55, 0.80) * tier_scale;
    const double cy = 0.5 * height + rng.uniform(-0.12, 0.12) * height;
    const double cx = 0.5 * width + rng.uniform(-0.12, 0.12) * width;

    Image img(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const bool in = inside_shape(shape, y + 0.5 - cy, x + 0.5 - cx, r);
        const Vec3& base = in ? fg : bg;
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) = base[static_cast<std::size_t>(c)] + rng.uniform(-0.04, 0.04);
        }
      }
    }
    quantize_to_u8_grid(img);
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace anw
