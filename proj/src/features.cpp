#include "dcrf/features.hpp"

#include <stdexcept>

namespace dcrf {

int feature_dim(FeatureKind kind) { return kind == FeatureKind::spatial ? 2 : 5; }

FeatureField build_features(const ImageU8& image, FeatureKind kind) {
  if (image.height <= 0 || image.width <= 0)
    throw std::invalid_argument("build_features: empty image");
  const int d = feature_dim(kind);
  FeatureField f(image.height, image.width, d);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      auto row = f.pixel(y * image.width + x);
      row[0] = static_cast<double>(x);
      row[1] = static_cast<double>(y);
      if (kind == FeatureKind::bilateral) {
        row[2] = static_cast<double>(image.at(y, x, 0));
        row[3] = static_cast<double>(image.at(y, x, 1));
        row[4] = static_cast<double>(image.at(y, x, 2));
      }
    }
  }
  return f;
}

}  // namespace dcrf
