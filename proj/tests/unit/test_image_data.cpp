#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "anw/dataset_io.hpp"
#include "anw/error.hpp"
#include "anw/image.hpp"
#include "anw/rng.hpp"
#include "anw/synthetic.hpp"

using namespace anw;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LabeledDataset random_quantized_dataset(Rng& rng, int count, int h, int w, int classes) {
  LabeledDataset ds;
  ds.num_classes = classes;
  for (int i = 0; i < count; ++i) {
    Image img(h, w);
    for (auto& p : img.pixels) p = static_cast<double>(rng.below(256)) / 255.0;
    ds.images.push_back(std::move(img));
    ds.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
  }
  return ds;
}

bool datasets_equal(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.num_classes != b.num_classes || a.labels != b.labels || a.images.size() != b.images.size())
    return false;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    if (a.images[i].height != b.images[i].height || a.images[i].width != b.images[i].width ||
        a.images[i].pixels != b.images[i].pixels)
      return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("image_data") {

TEST_CASE("synthetic generation balances labels") {
  const LabeledDataset ds = generate_synthetic(1000, 32, 32, 10, 7);
  CHECK(ds.size() == 1000);
  std::vector<int> counts(10, 0);
  for (int label : ds.labels) counts[static_cast<std::size_t>(label)]++;
  for (int c : counts) CHECK(c == 100);
}

TEST_CASE("synthetic generation is deterministic") {
  const LabeledDataset a = generate_synthetic(50, 32, 32, 10, 7);
  const LabeledDataset b = generate_synthetic(50, 32, 32, 10, 7);
  CHECK(datasets_equal(a, b));
}

TEST_CASE("synthetic pixels sit on the 8-bit grid inside [0,1]") {
  const LabeledDataset ds = generate_synthetic(20, 16, 16, 4, 3);
  for (const Image& img : ds.images)
    for (double p : img.pixels) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      const double scaled = p * 255.0;
      CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
    }
}

TEST_CASE("synthetic rejects zero counts") {
  CHECK_THROWS_AS(generate_synthetic(0, 32, 32, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic(10, 32, 32, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic(10, 4, 32, 10, 1), std::invalid_argument);
}

TEST_CASE("dataset write/read round-trips bit-exactly") {
  Rng rng(13);
  const std::string path = temp_path("anw_roundtrip.anw1");
  for (int trial = 0; trial < 20; ++trial) {
    const int count = 1 + static_cast<int>(rng.below(6));
    const int h = 4 + static_cast<int>(rng.below(9));
    const int w = 4 + static_cast<int>(rng.below(9));
    const int classes = 2 + static_cast<int>(rng.below(9));
    const LabeledDataset ds = random_quantized_dataset(rng, count, h, w, classes);
    write_dataset(ds, path);
    const LabeledDataset back = read_dataset(path);
    CHECK(datasets_equal(ds, back));
  }
  std::remove(path.c_str());
}

TEST_CASE("bad magic is reported as a magic error") {
  const std::string path = temp_path("anw_badmagic.anw1");
  write_bytes(path, {'X', 'X', 'X', 'X', 1, 0, 0, 0});
  try {
    read_dataset(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.field() == "magic");
  }
  std::remove(path.c_str());
}

TEST_CASE("zero num_classes is reported by field name") {
  // magic + count=1 + h=2 + w=2 + channels=3 + num_classes=0
  std::vector<std::uint8_t> bytes = {'A', 'N', 'W', '1', 1, 0, 0, 0, 2, 0, 0, 0,
                                     2,   0,   0,   0,   3, 0, 0, 0, 0, 0, 0, 0};
  const std::string path = temp_path("anw_zeroclasses.anw1");
  write_bytes(path, bytes);
  try {
    read_dataset(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.field() == "num_classes");
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated pixel payload names the pixels field") {
  Rng rng(1);
  LabeledDataset ds = random_quantized_dataset(rng, 2, 4, 4, 3);
  const std::string path = temp_path("anw_trunc.anw1");
  write_dataset(ds, path);
  // chop the last byte
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  bytes.pop_back();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  try {
    read_dataset(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.field() == "pixels");
  }
  std::remove(path.c_str());
}

TEST_CASE("cifar single record parses label and scaling") {
  std::vector<std::uint8_t> bytes(3073, 0);
  bytes[0] = 5;
  for (std::size_t i = 1; i < bytes.size(); ++i) bytes[i] = 255;
  const std::string path = temp_path("anw_cifar1.bin");
  write_bytes(path, bytes);
  const LabeledDataset ds = read_cifar10(path);
  CHECK(ds.size() == 1);
  CHECK(ds.labels[0] == 5);
  for (double p : ds.images[0].pixels) CHECK(p == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("cifar planar layout maps to interleaved channels") {
  std::vector<std::uint8_t> bytes(3073, 0);
  bytes[0] = 1;
  bytes[1] = 10;               // R of pixel 0
  bytes[1 + 1024] = 20;        // G of pixel 0
  bytes[1 + 2048] = 30;        // B of pixel 0
  bytes[1 + 33] = 40;          // R of row 1, col 1  (p = 33)
  const std::string path = temp_path("anw_cifar2.bin");
  write_bytes(path, bytes);
  const LabeledDataset ds = read_cifar10(path);
  CHECK(ds.images[0].at(0, 0, 0) == doctest::Approx(10.0 / 255.0));
  CHECK(ds.images[0].at(0, 0, 1) == doctest::Approx(20.0 / 255.0));
  CHECK(ds.images[0].at(0, 0, 2) == doctest::Approx(30.0 / 255.0));
  CHECK(ds.images[0].at(1, 1, 0) == doctest::Approx(40.0 / 255.0));
  std::remove(path.c_str());
}

TEST_CASE("cifar stray byte reports offset 6146") {
  std::vector<std::uint8_t> bytes(6147, 0);
  const std::string path = temp_path("anw_cifar3.bin");
  write_bytes(path, bytes);
  try {
    read_cifar10(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("6146") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("cifar bad label byte is rejected") {
  std::vector<std::uint8_t> bytes(3073, 0);
  bytes[0] = 10;
  const std::string path = temp_path("anw_cifar4.bin");
  write_bytes(path, bytes);
  CHECK_THROWS_AS(read_cifar10(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("cifar image count follows file length") {
  std::vector<std::uint8_t> bytes(3073 * 4, 0);
  const std::string path = temp_path("anw_cifar5.bin");
  write_bytes(path, bytes);
  CHECK(read_cifar10(path).size() == 4);
  std::remove(path.c_str());
}

TEST_CASE("split_users partitions evenly") {
  const auto parts = split_users(100, 10, 3);
  CHECK(parts.size() == 10);
  for (const auto& p : parts) CHECK(p.indices.size() == 10);
}

TEST_CASE("split_users remainder rule") {
  const auto parts = split_users(101, 10, 3);
  int elevens = 0, tens = 0;
  for (const auto& p : parts) {
    if (p.indices.size() == 11) ++elevens;
    if (p.indices.size() == 10) ++tens;
  }
  CHECK(elevens == 1);
  CHECK(tens == 9);
}

TEST_CASE("split_users is a deterministic disjoint cover") {
  const auto a = split_users(57, 7, 11);
  const auto b = split_users(57, 7, 11);
  std::set<std::size_t> seen;
  for (std::size_t u = 0; u < a.size(); ++u) {
    CHECK(a[u].indices == b[u].indices);
    for (std::size_t idx : a[u].indices) {
      CHECK(idx < 57);
      CHECK(seen.insert(idx).second);  // disjoint
    }
  }
  CHECK(seen.size() == 57);  // cover
}

TEST_CASE("split_users rejects zero users") {
  CHECK_THROWS_AS(split_users(10, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_users(5, 6, 1), std::invalid_argument);
}

TEST_CASE("normalize with matched mean and std zeroes the image") {
  Image img(2, 2);
  for (auto& p : img.pixels) p = 0.5;
  const Tensor t = normalize(img, NormalizationSpec::cifar());
  for (double v : t.data) CHECK(v == 0.0);
}

TEST_CASE("identity normalization keeps values") {
  Image img(2, 3);
  Rng rng(5);
  for (auto& p : img.pixels) p = rng.next_double();
  const Tensor t = normalize(img, NormalizationSpec::identity());
  CHECK(t.dim(0) == 3);
  CHECK(t.dim(1) == 2);
  CHECK(t.dim(2) == 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(t.data[static_cast<std::size_t>((c * 2 + y) * 3 + x)] == img.at(y, x, c));
}

TEST_CASE("normalize then denormalize recovers the image") {
  NormalizationSpec spec{{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
  Image img(5, 4);
  Rng rng(6);
  for (auto& p : img.pixels) p = rng.next_double();
  const Image back = denormalize(normalize(img, spec), spec);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) < 1e-6);
}

TEST_CASE("normalize rejects non-positive std") {
  Image img(2, 2);
  NormalizationSpec spec{{0, 0, 0}, {1, 0, 1}};
  CHECK_THROWS_AS(normalize(img, spec), std::invalid_argument);
}

}  // TEST_SUITE
