#include "projectron/features.hpp"

#include <stdexcept>

namespace projectron {

std::size_t feature_width(FeatureKind kind, std::size_t image_side, double delta_degrees) {
  if (kind == FeatureKind::raw) return image_side * image_side;
  return AngleSet(delta_degrees).size() * projection_length(image_side);
}

std::vector<double> image_features(const Image& image, const FeatureOptions& options) {
  if (options.kind == FeatureKind::raw) {
    return {image.pixels().begin(), image.pixels().end()};
  }
  auto v = feature_vector(sinogram(image, AngleSet(options.delta_degrees)));
  if (options.normalize_projections) scale_by_max(v);
  return v;
}

Dataset make_features(const ImageSet& images, const FeatureOptions& options) {
  Dataset out;
  out.classes = images.classes;
  out.split = images.split;
  out.labels = images.labels;
  if (images.size() == 0) {
    out.features.resize(0, 0);
    return out;
  }
  const std::size_t side = images.images.front().side();
  const std::size_t width = feature_width(options.kind, side, options.delta_degrees);
  out.features.resize(static_cast<Eigen::Index>(width),
                      static_cast<Eigen::Index>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images.images[i].side() != side) {
      throw std::invalid_argument("image " + std::to_string(i) + " has side " +
                                  std::to_string(images.images[i].side()) + ", expected " +
                                  std::to_string(side));
    }
    const auto v = image_features(images.images[i], options);
    out.features.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return out;
}

}  // namespace projectron
