#include "projectron/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "projectron/io_util.hpp"

namespace projectron {

ImageSet ImageSet::select(const std::vector<std::size_t>& indices) const {
  ImageSet out;
  out.classes = classes;
  out.class_names = class_names;
  out.split = split;
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.classes = classes;
  out.split = split;
  out.features.resize(features.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    out.features.col(static_cast<Eigen::Index>(j)) =
        features.col(static_cast<Eigen::Index>(indices[j]));
    out.labels.push_back(labels.at(indices[j]));
  }
  return out;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.cols()) != labels.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(features.cols()) +
                                " feature vectors but " + std::to_string(labels.size()) +
                                " labels");
  }
  for (std::size_t l : labels) {
    if (l >= classes) {
      throw std::invalid_argument("label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
  }
}

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw std::runtime_error(path.string() + ": truncated IDX header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    throw std::runtime_error(path.string() + ": bad IDX magic " + std::to_string(got) +
                             ", expected " + std::to_string(want));
  }
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

ImageSet load_mnist_idx(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path) {
  const auto img = read_file_bytes(image_path);
  const auto lbl = read_file_bytes(label_path);

  expect_magic(read_be32(img, 0, image_path), kIdxImageMagic, image_path);
  expect_magic(read_be32(lbl, 0, label_path), kIdxLabelMagic, label_path);

  const std::size_t count = read_be32(img, 4, image_path);
  const std::size_t rows = read_be32(img, 8, image_path);
  const std::size_t cols = read_be32(img, 12, image_path);
  const std::size_t label_count = read_be32(lbl, 4, label_path);

  if (rows == 0 || rows != cols) {
    throw std::runtime_error(image_path.string() + ": expected square images, got " +
                             std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (img.size() != 16 + count * rows * cols) {
    throw std::runtime_error(image_path.string() + ": size " + std::to_string(img.size()) +
                             " does not match header (" + std::to_string(count) +
                             " images of " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ")");
  }
  if (lbl.size() != 8 + label_count) {
    throw std::runtime_error(label_path.string() + ": size does not match header count " +
                             std::to_string(label_count));
  }
  if (count != label_count) {
    throw std::runtime_error("image count " + std::to_string(count) + " in " +
                             image_path.string() + " != label count " +
                             std::to_string(label_count) + " in " + label_path.string());
  }

  ImageSet set;
  set.images.reserve(count);
  set.labels.reserve(count);
  const std::size_t px = rows * cols;
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> pixels(px);
    const std::uint8_t* src = img.data() + 16 + i * px;
    for (std::size_t p = 0; p < px; ++p) pixels[p] = src[p] / 255.0;
    set.images.emplace_back(rows, std::move(pixels));
    set.labels.push_back(lbl[8 + i]);
    max_label = std::max<std::size_t>(max_label, lbl[8 + i]);
  }
  set.classes = std::max<std::size_t>(10, max_label + 1);
  for (std::size_t c = 0; c < set.classes; ++c) set.class_names.push_back(std::to_string(c));
  return set;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open manifest " + csv_path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (line_no == 1 && !fields.empty() &&
        (fields[0] == "path" || fields[0] == "relative_path")) {
      continue;
    }
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error(csv_path.string() + ":" + std::to_string(line_no) +
                               ": expected relative_path,class_name[,split]");
    }
    ManifestEntry e{fields[0], fields[1], std::nullopt};
    if (fields.size() == 3) {
      if (fields[2] == "train") {
        e.split = Split::train;
      } else if (fields[2] == "test") {
        e.split = Split::test;
      } else {
        throw std::runtime_error(csv_path.string() + ":" + std::to_string(line_no) +
                                 ": split must be train or test, got " + fields[2]);
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

RawImage read_raw_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing image file " + path.string());
  }
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_ANYCOLOR);
  if (mat.empty()) throw std::runtime_error("unreadable image " + path.string());
  cv::Mat converted;
  mat.convertTo(converted, CV_64F);
  RawImage raw;
  raw.width = static_cast<std::size_t>(converted.cols);
  raw.height = static_cast<std::size_t>(converted.rows);
  raw.channels = static_cast<std::size_t>(converted.channels());
  raw.data.resize(raw.width * raw.height * raw.channels);
  for (int r = 0; r < converted.rows; ++r) {
    const double* row = converted.ptr<double>(r);
    for (std::size_t i = 0; i < raw.width * raw.channels; ++i) {
      raw.data[static_cast<std::size_t>(r) * raw.width * raw.channels + i] = row[i];
    }
  }
  // OpenCV decodes colour as BGR(A); grayscale weights expect RGB.
  if (raw.channels >= 3) {
    for (std::size_t p = 0; p < raw.width * raw.height; ++p) {
      std::swap(raw.data[p * raw.channels], raw.data[p * raw.channels + 2]);
    }
  }
  return raw;
}

ImageSet load_image_dir(const std::filesystem::path& root,
                        const std::vector<ManifestEntry>& manifest,
                        std::size_t target_side,
                        const std::vector<std::string>& known_classes) {
  if (manifest.empty()) throw std::invalid_argument("manifest is empty");

  std::set<std::string> seen;
  for (const auto& e : manifest) {
    if (!seen.insert(e.path).second) {
      throw std::invalid_argument("duplicate path in manifest: " + e.path);
    }
  }
  std::set<std::string> names;
  if (!known_classes.empty()) {
    names.insert(known_classes.begin(), known_classes.end());
    for (const auto& e : manifest) {
      if (!names.count(e.class_name)) {
        throw std::invalid_argument("unknown class '" + e.class_name + "' for " + e.path);
      }
    }
  } else {
    for (const auto& e : manifest) names.insert(e.class_name);
  }
  std::map<std::string, std::size_t> index;
  ImageSet set;
  for (const auto& n : names) {
    index[n] = set.class_names.size();
    set.class_names.push_back(n);
  }
  set.classes = set.class_names.size();

  std::vector<const ManifestEntry*> sorted;
  for (const auto& e : manifest) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->path < b->path; });
  for (const auto* e : sorted) {
    set.images.push_back(preprocess(read_raw_image(root / e->path), target_side));
    set.labels.push_back(index.at(e->class_name));
  }
  return set;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double held_fraction, std::uint64_t seed) {
  if (held_fraction < 0.0 || held_fraction >= 1.0) {
    throw std::invalid_argument("held-out fraction must lie in [0, 1)");
  }
  auto perm = seeded_permutation(n, seed);
  auto held_count = static_cast<std::size_t>(std::llround(held_fraction * static_cast<double>(n)));
  if (held_fraction > 0.0 && n >= 2) held_count = std::clamp<std::size_t>(held_count, 1, n - 1);
  std::vector<std::size_t> held(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(held_count));
  std::vector<std::size_t> kept(perm.begin() + static_cast<std::ptrdiff_t>(held_count), perm.end());
  std::sort(held.begin(), held.end());
  std::sort(kept.begin(), kept.end());
  return {std::move(kept), std::move(held)};
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t count,
                                           std::uint64_t seed) {
  if (count == 0 || count >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  auto perm = seeded_permutation(n, seed);
  perm.resize(count);
  std::sort(perm.begin(), perm.end());
  return perm;
}

}  // namespace projectron
