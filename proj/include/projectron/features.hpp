#pragma once

#include <cstddef>

#include "projectron/dataset.hpp"
#include "projectron/radon.hpp"

namespace projectron {

enum class FeatureKind { raw, radon };

struct FeatureOptions {
  FeatureKind kind = FeatureKind::radon;
  double delta_degrees = AngleSet::kDefaultDelta;
  /// Divide each Radon feature vector by its maximum.
  bool normalize_projections = false;
};

std::size_t feature_width(FeatureKind kind, std::size_t image_side,
                          double delta_degrees);

/// Raw pixels (row-major) or the flattened sinogram of one image.
std::vector<double> image_features(const Image& image, const FeatureOptions& options);

Dataset make_features(const ImageSet& images, const FeatureOptions& options);

}  // namespace projectron
