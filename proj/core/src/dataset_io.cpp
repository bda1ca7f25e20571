#include "anw/dataset_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "anw/error.hpp"
#include "binary_io.hpp"

namespace anw {
namespace {

constexpr char kMagic[4] = {'A', 'N', 'W', '1'};
constexpr int kCifarDim = 32;
constexpr std::size_t kCifarRecord = 3073;

std::uint8_t quantize(double v) {
  double clipped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(std::lround(clipped * 255.0));
}

}  // namespace

void write_dataset(const LabeledDataset& dataset, const std::string& path) {
  if (dataset.images.empty()) throw std::invalid_argument("write_dataset: empty dataset");
  if (dataset.images.size() != dataset.labels.size())
    throw std::invalid_argument("write_dataset: images/labels length mismatch");
  if (dataset.num_classes <= 0)
    throw std::invalid_argument("write_dataset: num_classes must be positive");

  const int h = dataset.images[0].height;
  const int w = dataset.images[0].width;
  std::vector<std::uint8_t> out;
  out.reserve(24 + dataset.size() * (2 + static_cast<std::size_t>(h) * w * 3));
  out.insert(out.end(), kMagic, kMagic + 4);
  detail::put_u32(out, static_cast<std::uint32_t>(dataset.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(h));
  detail::put_u32(out, static_cast<std::uint32_t>(w));
  detail::put_u32(out, 3);
  detail::put_u32(out, static_cast<std::uint32_t>(dataset.num_classes));

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int label = dataset.labels[i];
    if (label < 0 || label >= dataset.num_classes)
      throw std::invalid_argument("write_dataset: label out of range");
    detail::put_u16(out, static_cast<std::uint16_t>(label));
  }
  for (const Image& img : dataset.images) {
    if (img.height != h || img.width != w)
      throw std::invalid_argument("write_dataset: image dimensions are not uniform");
    for (double v : img.pixels) out.push_back(quantize(v));
  }
  detail::spew(path, out);
}

LabeledDataset read_dataset(const std::string& path) {
  detail::ByteReader r(detail::slurp(path));

  const std::uint8_t* magic = r.raw(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("magic", "bad magic in " + path);

  const std::uint32_t count = r.u32("count");
  if (count == 0) throw FormatError("count", "count is zero in " + path);
  const std::uint32_t height = r.u32("height");
  const std::uint32_t width = r.u32("width");
  if (height == 0) throw FormatError("height", "height is zero in " + path);
  if (width == 0) throw FormatError("width", "width is zero in " + path);
  const std::uint32_t channels = r.u32("channels");
  if (channels != 3)
    throw FormatError("channels", "channels must be 3, got " + std::to_string(channels));
  const std::uint32_t num_classes = r.u32("num_classes");
  if (num_classes == 0) throw FormatError("num_classes", "num_classes is zero in " + path);

  LabeledDataset ds;
  ds.num_classes = static_cast<int>(num_classes);
  ds.labels.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t label = r.u16("labels");
    if (label >= num_classes)
      throw FormatError("labels", "label " + std::to_string(label) + " >= num_classes at index " +
                                      std::to_string(i));
    ds.labels.push_back(static_cast<int>(label));
  }

  const std::size_t plane = static_cast<std::size_t>(height) * width * 3;
  ds.images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* bytes = r.raw(plane, "pixels");
    Image img(static_cast<int>(height), static_cast<int>(width));
    for (std::size_t p = 0; p < plane; ++p) img.pixels[p] = bytes[p] / 255.0;
    ds.images.push_back(std::move(img));
  }
  if (r.remaining() != 0)
    throw FormatError("size", std::to_string(r.remaining()) + " trailing bytes at offset " +
                                  std::to_string(r.offset()));
  return ds;
}

LabeledDataset read_cifar10(const std::string& path) {
  const std::vector<std::uint8_t> bytes = detail::slurp(path);
  if (bytes.size() % kCifarRecord != 0) {
    const std::size_t whole = (bytes.size() / kCifarRecord) * kCifarRecord;
    throw FormatError("record", "file length " + std::to_string(bytes.size()) +
                                    " is not a multiple of 3073; stray data at offset " +
                                    std::to_string(whole));
  }
  const std::size_t count = bytes.size() / kCifarRecord;
  if (count == 0) throw FormatError("record", "empty CIFAR file " + path);

  LabeledDataset ds;
  ds.num_classes = 10;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecord;
    if (rec[0] >= 10)
      throw FormatError("label", "label byte " + std::to_string(rec[0]) + " >= 10 at offset " +
                                     std::to_string(i * kCifarRecord));
    ds.labels.push_back(rec[0]);
    Image img(kCifarDim, kCifarDim);
    const std::uint8_t* planes = rec + 1;
    for (int c = 0; c < 3; ++c) {
      for (int p = 0; p < kCifarDim * kCifarDim; ++p) {
        img.pixels[static_cast<std::size_t>(p) * 3 + c] = planes[c * 1024 + p] / 255.0;
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

}  // namespace anw
