#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace projectron {

/// Decoded image before preprocessing: interleaved channels, row-major,
/// arbitrary intensity range.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<double> data;

  double at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return data[(row * width + col) * channels + ch];
  }
};

/// Square grayscale image with intensities in [0, 1], stored row-major.
/// Column index is x, row index is y.
class Image {
 public:
  Image() = default;
  explicit Image(std::size_t side);
  Image(std::size_t side, std::vector<double> pixels);

  std::size_t side() const { return side_; }
  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  double& operator()(std::size_t row, std::size_t col) {
    return pixels_[row * side_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const {
    return pixels_[row * side_ + col];
  }

  double total() const;

 private:
  std::size_t side_ = 0;
  std::vector<double> pixels_;
};

/// Equi-spaced projection angles {0, delta, 2*delta, ...} strictly below 180.
class AngleSet {
 public:
  static constexpr double kDefaultDelta = 15.0;

  explicit AngleSet(double delta_degrees = kDefaultDelta);

  double delta() const { return delta_; }
  const std::vector<double>& degrees() const { return degrees_; }
  std::size_t size() const { return degrees_.size(); }

  /// Arbitrary ordered angle list; used for order-sensitivity checks and
  /// single-angle sinograms. Each angle must lie in [0, 180).
  static AngleSet from_list(std::vector<double> degrees);

 private:
  double delta_ = kDefaultDelta;
  std::vector<double> degrees_;
};

struct Sinogram {
  std::vector<double> angles;  // degrees, row order
  std::size_t bins = 0;
  std::vector<std::vector<double>> rows;
};

/// Detector length for an N x N image: ceil(N * sqrt(2)).
std::size_t projection_length(std::size_t side);

/// Gray-scale (ITU-R BT.601 luma), bilinear resize to target_side, then
/// min-max normalize into [0, 1]. A constant image maps to all zeros.
Image preprocess(const RawImage& raw, std::size_t target_side);

/// Min-max normalization in place; constant input becomes zeros.
void min_max_normalize(std::span<double> values);

/// Pixel-driven projection at angle theta (degrees). Each pixel's intensity
/// is split between the two detector bins nearest to
/// rho = (x - c) cos(theta) + (y - c) sin(theta), c = (N - 1) / 2, with
/// the detector centred on the image centre. Mass is conserved exactly up
/// to rounding.
std::vector<double> radon_projection(const Image& image, double theta_degrees);

Sinogram sinogram(const Image& image, const AngleSet& angles);

/// Rows concatenated in angle order.
std::vector<double> feature_vector(const Sinogram& s);

/// Divides the vector by its maximum entry when that maximum is positive.
void scale_by_max(std::span<double> values);

void write_sinogram_csv(const Sinogram& s, const std::filesystem::path& path);

/// 8-bit binary PGM, rows = angles, columns = bins, linearly rescaled from
/// [min, max] to [0, 255].
void write_sinogram_pgm(const Sinogram& s, const std::filesystem::path& path);

}  // namespace projectron
