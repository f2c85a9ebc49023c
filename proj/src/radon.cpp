#include "projectron/radon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "projectron/io_util.hpp"

namespace projectron {

Image::Image(std::size_t side) : side_(side), pixels_(side * side, 0.0) {}

Image::Image(std::size_t side, std::vector<double> pixels)
    : side_(side), pixels_(std::move(pixels)) {
  if (pixels_.size() != side_ * side_) {
    throw std::invalid_argument("Image: pixel count " +
                                std::to_string(pixels_.size()) +
                                " does not match side " + std::to_string(side_));
  }
}

double Image::total() const {
  double sum = 0.0;
  for (double p : pixels_) sum += p;
  return sum;
}

AngleSet::AngleSet(double delta_degrees) : delta_(delta_degrees) {
  if (!(delta_degrees > 0.0) || delta_degrees > 180.0) {
    throw std::invalid_argument("angle step must lie in (0, 180], got " +
                                std::to_string(delta_degrees));
  }
  // Integer multiples avoid accumulating rounding in the angle list.
  for (std::size_t k = 0;; ++k) {
    const double angle = static_cast<double>(k) * delta_degrees;
    if (angle >= 180.0 - 1e-9) break;
    degrees_.push_back(angle);
  }
}

AngleSet AngleSet::from_list(std::vector<double> degrees) {
  if (degrees.empty()) throw std::invalid_argument("angle list is empty");
  for (double a : degrees) {
    if (!(a >= 0.0 && a < 180.0)) {
      throw std::out_of_range("angle " + std::to_string(a) +
                              " outside [0, 180)");
    }
  }
  AngleSet set(180.0);
  set.delta_ = degrees.size() > 1 ? degrees[1] - degrees[0] : 180.0;
  set.degrees_ = std::move(degrees);
  return set;
}

std::size_t projection_length(std::size_t side) {
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(side) * std::numbers::sqrt2));
}

void min_max_normalize(std::span<double> values) {
  if (values.empty()) return;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - min;
  if (range <= 0.0) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  for (double& v : values) v = (v - min) / range;
}

namespace {

std::vector<double> to_gray(const RawImage& raw) {
  std::vector<double> gray(raw.width * raw.height);
  for (std::size_t r = 0; r < raw.height; ++r) {
    for (std::size_t c = 0; c < raw.width; ++c) {
      double v;
      if (raw.channels >= 3) {
        v = 0.299 * raw.at(r, c, 0) + 0.587 * raw.at(r, c, 1) +
            0.114 * raw.at(r, c, 2);
      } else {
        v = raw.at(r, c, 0);
      }
      gray[r * raw.width + c] = v;
    }
  }
  return gray;
}

// Half-pixel-centre bilinear sampling with edge clamping.
std::vector<double> resize_bilinear(const std::vector<double>& src,
                                    std::size_t width, std::size_t height,
                                    std::size_t side) {
  if (width == side && height == side) return src;
  std::vector<double> dst(side * side);
  const double sx = static_cast<double>(width) / static_cast<double>(side);
  const double sy = static_cast<double>(height) / static_cast<double>(side);
  auto coord = [](double pos, std::size_t extent, std::size_t& i0,
                  std::size_t& i1, double& frac) {
    pos = std::clamp(pos, 0.0, static_cast<double>(extent - 1));
    const double f = std::floor(pos);
    i0 = static_cast<std::size_t>(f);
    i1 = std::min(i0 + 1, extent - 1);
    frac = pos - f;
  };
  for (std::size_t r = 0; r < side; ++r) {
    std::size_t y0, y1;
    double fy;
    coord((static_cast<double>(r) + 0.5) * sy - 0.5, height, y0, y1, fy);
    for (std::size_t c = 0; c < side; ++c) {
      std::size_t x0, x1;
      double fx;
      coord((static_cast<double>(c) + 0.5) * sx - 0.5, width, x0, x1, fx);
      const double top =
          (1.0 - fx) * src[y0 * width + x0] + fx * src[y0 * width + x1];
      const double bottom =
          (1.0 - fx) * src[y1 * width + x0] + fx * src[y1 * width + x1];
      dst[r * side + c] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return dst;
}

// Exact values on the axes so that axis-aligned projections are exact sums.
void direction(double theta_degrees, double& cos_t, double& sin_t) {
  if (theta_degrees == 0.0) {
    cos_t = 1.0;
    sin_t = 0.0;
  } else if (theta_degrees == 90.0) {
    cos_t = 0.0;
    sin_t = 1.0;
  } else {
    const double rad = theta_degrees * std::numbers::pi / 180.0;
    cos_t = std::cos(rad);
    sin_t = std::sin(rad);
  }
}

}  // namespace

Image preprocess(const RawImage& raw, std::size_t target_side) {
  if (raw.width == 0 || raw.height == 0 || raw.channels == 0 ||
      raw.data.size() != raw.width * raw.height * raw.channels) {
    throw std::invalid_argument("preprocess: empty or malformed input image");
  }
  if (target_side < 2) {
    throw std::invalid_argument("preprocess: target side must be >= 2, got " +
                                std::to_string(target_side));
  }
  auto pixels =
      resize_bilinear(to_gray(raw), raw.width, raw.height, target_side);
  min_max_normalize(pixels);
  return Image(target_side, std::move(pixels));
}

std::vector<double> radon_projection(const Image& image, double theta_degrees) {
  if (!(theta_degrees >= 0.0 && theta_degrees < 180.0)) {
    throw std::out_of_range("projection angle " +
                            std::to_string(theta_degrees) +
                            " outside [0, 180)");
  }
  const std::size_t n = image.side();
  const std::size_t bins = projection_length(n);
  std::vector<double> out(bins, 0.0);
  if (n == 0) return out;

  double cos_t, sin_t;
  direction(theta_degrees, cos_t, sin_t);
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  const double origin = (static_cast<double>(bins) - 1.0) / 2.0;

  for (std::size_t y = 0; y < n; ++y) {
    const double dy = (static_cast<double>(y) - centre) * sin_t;
    for (std::size_t x = 0; x < n; ++x) {
      const double value = image(y, x);
      if (value == 0.0) continue;
      const double rho = (static_cast<double>(x) - centre) * cos_t + dy;
      const double t = rho + origin;
      const double lower = std::floor(t);
      const double frac = t - lower;
      const auto k = static_cast<std::size_t>(lower);
      out[k] += (1.0 - frac) * value;
      if (frac > 0.0) out[k + 1] += frac * value;
    }
  }
  return out;
}

Sinogram sinogram(const Image& image, const AngleSet& angles) {
  Sinogram s;
  s.angles = angles.degrees();
  s.bins = projection_length(image.side());
  s.rows.reserve(angles.size());
  for (double theta : angles.degrees()) {
    s.rows.push_back(radon_projection(image, theta));
  }
  return s;
}

std::vector<double> feature_vector(const Sinogram& s) {
  std::vector<double> out;
  out.reserve(s.rows.size() * s.bins);
  for (const auto& row : s.rows) out.insert(out.end(), row.begin(), row.end());
  return out;
}

void scale_by_max(std::span<double> values) {
  if (values.empty()) return;
  const double max = *std::max_element(values.begin(), values.end());
  if (max <= 0.0) return;
  for (double& v : values) v /= max;
}

void write_sinogram_csv(const Sinogram& s, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "angle";
  for (std::size_t k = 0; k < s.bins; ++k) out << ',' << k;
  out << '\n';
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    out << format_number(s.angles[r]);
    for (double v : s.rows[r]) out << ',' << format_number(v);
    out << '\n';
  }
  finish_write(out, path);
}

void write_sinogram_pgm(const Sinogram& s, const std::filesystem::path& path) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& row : s.rows) {
    for (double v : row) {
      if (first || v < lo) lo = v;
      if (first || v > hi) hi = v;
      first = false;
    }
  }
  const double range = hi - lo;
  std::ofstream out = open_for_write(path, std::ios::binary);
  out << "P5\n" << s.bins << ' ' << s.rows.size() << "\n255\n";
  for (const auto& row : s.rows) {
    for (double v : row) {
      const double scaled = range > 0.0 ? (v - lo) / range * 255.0 : 0.0;
      out.put(static_cast<char>(
          static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0)))));
    }
  }
  finish_write(out, path);
}

}  // namespace projectron
