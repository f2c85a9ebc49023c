#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "projectron/network.hpp"
#include "projectron/radon.hpp"

namespace projectron {

enum class Split { train, test };

/// Preprocessed images with labels.
struct ImageSet {
  std::vector<Image> images;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  Split split = Split::train;

  std::size_t size() const { return images.size(); }
  ImageSet select(const std::vector<std::size_t>& indices) const;
};

/// Fixed-width feature vectors, one per column.
struct Dataset {
  Matrix features;  // width x count
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  Split split = Split::train;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return static_cast<std::size_t>(features.rows()); }
  Dataset select(const std::vector<std::size_t>& indices) const;
  /// Throws unless every label is in range and feature count matches.
  void validate() const;
};

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// MNIST IDX pair: big-endian headers, images scaled to [0, 1].
ImageSet load_mnist_idx(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path);

struct ManifestEntry {
  std::string path;        // relative to the dataset root
  std::string class_name;
  std::optional<Split> split;
};

/// CSV of `relative_path,class_name[,train|test]`; a header line whose first
/// field is `path` or `relative_path` is skipped.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& csv_path);
/// Decodes every manifest image to target_side and sorts items by path.
/// Class indices follow sorted class names; when known_classes is
/// given, any other class name is an error.
ImageSet load_image_dir(const std::filesystem::path& root,
                        const std::vector<ManifestEntry>& manifest,
                        std::size_t target_side,
                        const std::vector<std::string>& known_classes = {});

RawImage read_raw_image(const std::filesystem::path& path);

/// Seeded permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Splits indices [0, n) into (kept, held) with round(fraction * n) held
/// items, at least one when n >= 2 and fraction > 0.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double held_fraction, std::uint64_t seed);

/// Seeded subsample of `count` items (all items when count is 0 or >= size),
/// kept in original order.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t count,
                                           std::uint64_t seed);

}  // namespace projectron
