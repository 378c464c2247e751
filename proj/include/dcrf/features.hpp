#ifndef DCRF_FEATURES_HPP
#define DCRF_FEATURES_HPP

#include <span>
#include <vector>

#include "dcrf/field.hpp"

namespace dcrf {

enum class FeatureKind {
  spatial,    // (x, y), d = 2
  bilateral,  // (x, y, r, g, b), d = 5
};

// Per-pixel feature vectors in raw units: pixel coordinates in pixels, color
// channels in [0, 255].
struct FeatureField {
  int height = 0;
  int width = 0;
  int dim = 0;
  std::vector<double> values;

  FeatureField() = default;
  FeatureField(int h, int w, int d)
      : height(h), width(w), dim(d), values(static_cast<std::size_t>(h) * w * d, 0.0) {}

  int pixels() const { return height * width; }
  std::span<double> pixel(int i) {
    return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> pixel(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
};

int feature_dim(FeatureKind kind);

FeatureField build_features(const ImageU8& image, FeatureKind kind);

}  // namespace dcrf

#endif
