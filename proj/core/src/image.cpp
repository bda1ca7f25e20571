#include "anw/image.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "anw/rng.hpp"

namespace anw {

Tensor normalize(const Image& image, const NormalizationSpec& spec) {
  for (double s : spec.std) {
    if (!(s > 0.0)) throw std::invalid_argument("normalize: std components must be positive");
  }
  Tensor out = Tensor::zeros({3, image.height, image.width});
  const int hw = image.height * image.width;
  for (int c = 0; c < 3; ++c) {
    const double mean = spec.mean[static_cast<std::size_t>(c)];
    const double inv_std = 1.0 / spec.std[static_cast<std::size_t>(c)];
    double* plane = out.data.data() + static_cast<std::size_t>(c) * hw;
    const double* px = image.pixels.data();
    for (int i = 0; i < hw; ++i) plane[i] = (px[i * 3 + c] - mean) * inv_std;
  }
  return out;
}

Image denormalize(const Tensor& chw, const NormalizationSpec& spec) {
  const int h = chw.dim(1), w = chw.dim(2);
  Image img(h, w);
  const int hw = h * w;
  for (int c = 0; c < 3; ++c) {
    const double mean = spec.mean[static_cast<std::size_t>(c)];
    const double std = spec.std[static_cast<std::size_t>(c)];
    const double* plane = chw.data.data() + static_cast<std::size_t>(c) * hw;
    for (int i = 0; i < hw; ++i) img.pixels[static_cast<std::size_t>(i) * 3 + c] = plane[i] * std + mean;
  }
  return img;
}

Tensor normalized_batch(const std::vector<Image>& images, const NormalizationSpec& spec) {
  if (images.empty()) throw std::invalid_argument("normalized_batch: empty image list");
  const int h = images[0].height, w = images[0].width;
  Tensor batch = Tensor::zeros({static_cast<int>(images.size()), 3, h, w});
  const std::int64_t stride = static_cast<std::int64_t>(3) * h * w;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height != h || images[i].width != w)
      throw std::invalid_argument("normalized_batch: images must share dimensions");
    Tensor one = normalize(images[i], spec);
    std::copy(one.data.begin(), one.data.end(),
              batch.data.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::int64_t>(i)));
  }
  return batch;
}

std::vector<UserPartition> split_users(std::size_t dataset_size, int num_users,
                                       std::uint64_t seed) {
  if (num_users <= 0) throw std::invalid_argument("split_users: num_users must be positive");
  if (static_cast<std::size_t>(num_users) > dataset_size)
    throw std::invalid_argument("split_users: more users than samples");

  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  // First (dataset_size % num_users) partitions get one extra element.
  std::vector<UserPartition> parts(static_cast<std::size_t>(num_users));
  const std::size_t base = dataset_size / static_cast<std::size_t>(num_users);
  const std::size_t extra = dataset_size % static_cast<std::size_t>(num_users);
  std::size_t pos = 0;
  for (int u = 0; u < num_users; ++u) {
    const std::size_t take = base + (static_cast<std::size_t>(u) < extra ? 1 : 0);
    parts[static_cast<std::size_t>(u)].user_id = u;
    parts[static_cast<std::size_t>(u)].indices.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                                      order.begin() + static_cast<std::ptrdiff_t>(pos + take));
    pos += take;
  }
  return parts;
}

void quantize_to_u8_grid(Image& image) {
  for (double& v : image.pixels) {
    double clipped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    v = std::round(clipped * 255.0) / 255.0;
  }
}

}  // namespace anw
