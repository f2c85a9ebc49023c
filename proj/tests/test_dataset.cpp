#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "projectron/dataset.hpp"

using namespace projectron;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     std::uint32_t magic = kIdxImageMagic) {
  std::vector<std::uint8_t> b;
  put_be32(b, magic);
  put_be32(b, count);
  put_be32(b, rows);
  put_be32(b, cols);
  for (std::uint32_t i = 0; i < count * rows * cols; ++i) b.push_back(static_cast<std::uint8_t>(i % 256));
  return b;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels,
                                     std::uint32_t magic = kIdxLabelMagic) {
  std::vector<std::uint8_t> b;
  put_be32(b, magic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

void write_pgm(const fs::path& p, std::size_t w, std::size_t h, std::uint8_t base) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (std::size_t i = 0; i < w * h; ++i) out.put(static_cast<char>(base + i));
}

}  // namespace

TEST(MnistIdx, ReadsSyntheticPair) {
  TempDir dir("projectron_idx_ok");
  write_bytes(dir.path() / "img", idx_images(3, 4, 4));
  write_bytes(dir.path() / "lbl", idx_labels({7, 0, 3}));
  const ImageSet set = load_mnist_idx(dir.path() / "img", dir.path() / "lbl");
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set.labels, (std::vector<std::size_t>{7, 0, 3}));
  EXPECT_EQ(set.classes, 10u);
  EXPECT_EQ(set.images[0].side(), 4u);
  EXPECT_DOUBLE_EQ(set.images[0](0, 1), 1.0 / 255.0);
  EXPECT_DOUBLE_EQ(set.images[1](0, 0), 16.0 / 255.0);
}

TEST(MnistIdx, RejectsCorruptHeaders) {
  TempDir dir("projectron_idx_bad");
  const auto img = dir.path() / "img";
  const auto lbl = dir.path() / "lbl";
  write_bytes(lbl, idx_labels({1, 2}));

  write_bytes(img, idx_images(2, 4, 4, 2049));
  EXPECT_THROW(load_mnist_idx(img, lbl), std::runtime_error);

  auto truncated = idx_images(2, 4, 4);
  truncated.pop_back();
  write_bytes(img, truncated);
  EXPECT_THROW(load_mnist_idx(img, lbl), std::runtime_error);

  write_bytes(img, idx_images(3, 4, 4));
  EXPECT_THROW(load_mnist_idx(img, lbl), std::runtime_error);

  write_bytes(img, idx_images(2, 4, 4));
  write_bytes(lbl, idx_labels({1, 2}, 2051));
  EXPECT_THROW(load_mnist_idx(img, lbl), std::runtime_error);

  EXPECT_THROW(load_mnist_idx(dir.path() / "missing", lbl), std::runtime_error);
}

TEST(Manifest, ParsesOptionalHeaderAndSplit) {
  TempDir dir("projectron_manifest");
  {
    std::ofstream out(dir.path() / "manifest.csv");
    out << "relative_path,class_name,split\n"
        << "a/1.pgm,cat,train\n"
        << "b/2.pgm,dog,test\n"
        << "c/3.pgm,dog\n";
  }
  const auto entries = read_manifest(dir.path() / "manifest.csv");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].path, "a/1.pgm");
  EXPECT_EQ(entries[0].class_name, "cat");
  EXPECT_EQ(entries[0].split, Split::train);
  EXPECT_EQ(entries[1].split, Split::test);
  EXPECT_FALSE(entries[2].split.has_value());
}

TEST(ImageDir, LoadsSortedWithClassIndices) {
  TempDir dir("projectron_imagedir");
  write_pgm(dir.path() / "z.pgm", 6, 6, 0);
  write_pgm(dir.path() / "y.pgm", 8, 4, 10);
  write_pgm(dir.path() / "x.pgm", 5, 5, 20);
  write_pgm(dir.path() / "w.pgm", 7, 7, 30);
  const std::vector<ManifestEntry> manifest = {
      {"z.pgm", "beta", std::nullopt},
      {"y.pgm", "alpha", std::nullopt},
      {"x.pgm", "beta", std::nullopt},
      {"w.pgm", "alpha", std::nullopt},
  };
  const ImageSet set = load_image_dir(dir.path(), manifest, 10);
  ASSERT_EQ(set.size(), 4u);
  EXPECT_EQ(set.classes, 2u);
  EXPECT_EQ(set.class_names, (std::vector<std::string>{"alpha", "beta"}));
  EXPECT_EQ(set.labels, (std::vector<std::size_t>{0, 1, 0, 1}));
  for (const Image& img : set.images) {
    EXPECT_EQ(img.side(), 10u);
    const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    EXPECT_DOUBLE_EQ(*lo, 0.0);
    EXPECT_DOUBLE_EQ(*hi, 1.0);
  }
}

TEST(ImageDir, Errors) {
  TempDir dir("projectron_imagedir_err");
  write_pgm(dir.path() / "a.pgm", 4, 4, 0);
  {
    std::ofstream junk(dir.path() / "junk.pgm");
    junk << "not an image";
  }
  EXPECT_THROW(load_image_dir(dir.path(), {}, 8), std::invalid_argument);
  EXPECT_THROW(load_image_dir(dir.path(), {{"a.pgm", "x", {}}, {"a.pgm", "y", {}}}, 8),
               std::invalid_argument);
  EXPECT_THROW(load_image_dir(dir.path(), {{"a.pgm", "x", {}}}, 8, {"y", "z"}),
               std::invalid_argument);
  EXPECT_THROW(load_image_dir(dir.path(), {{"missing.pgm", "x", {}}}, 8), std::runtime_error);
  EXPECT_THROW(load_image_dir(dir.path(), {{"junk.pgm", "x", {}}}, 8), std::runtime_error);
}

TEST(DatasetType, SelectAndValidate) {
  Dataset d;
  d.features = Matrix{{1, 2, 3}, {4, 5, 6}};
  d.labels = {0, 1, 1};
  d.classes = 2;
  d.validate();
  const Dataset s = d.select({2, 0});
  EXPECT_EQ(s.labels, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(s.features(1, 0), 6.0);
  d.labels[0] = 2;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(Splitting, PermutationIsSeededBijection) {
  const auto a = seeded_permutation(100, 9);
  EXPECT_EQ(a, seeded_permutation(100, 9));
  EXPECT_NE(a, seeded_permutation(100, 10));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(100);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(sorted, iota);
}

TEST(Splitting, SplitIndicesPartition) {
  const auto [kept, held] = split_indices(1000, 0.1, 3);
  EXPECT_EQ(held.size(), 100u);
  EXPECT_EQ(kept.size(), 900u);
  std::set<std::size_t> all(kept.begin(), kept.end());
  all.insert(held.begin(), held.end());
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_EQ(split_indices(5, 0.01, 0).second.size(), 1u);
  EXPECT_EQ(split_indices(2, 0.99, 0).first.size(), 1u);
}

TEST(Splitting, SubsampleKeepsOrder) {
  const auto s = subsample_indices(50, 10, 4);
  EXPECT_EQ(s.size(), 10u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(subsample_indices(5, 0, 4).size(), 5u);
  EXPECT_EQ(subsample_indices(5, 9, 4).size(), 5u);
}
