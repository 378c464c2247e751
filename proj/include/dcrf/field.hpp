#ifndef DCRF_FIELD_HPP
#define DCRF_FIELD_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcrf {

// Discrete label domain shared by scores, marginals and label maps.
struct LabelSpace {
  int num_labels = 0;
  int void_label = 255;

  void validate() const {
    if (num_labels < 2)
      throw std::invalid_argument("LabelSpace: need at least 2 labels, got " +
                                  std::to_string(num_labels));
    if (void_label >= 0 && void_label < num_labels)
      throw std::invalid_argument("LabelSpace: void label " + std::to_string(void_label) +
                                  " collides with a valid label");
  }
};

// Dense H x W x C grid of doubles with the channel (label) index innermost.
// Used both for per-pixel label scores and for per-pixel marginals.
struct Field3 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;

  Field3() = default;
  Field3(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), values(static_cast<std::size_t>(h) * w * c, fill) {}

  int pixels() const { return height * width; }
  std::size_t size() const { return values.size(); }

  double& at(int y, int x, int c) {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  // Channel row of pixel i (i = y * width + x).
  std::span<double> pixel(int i) {
    return {values.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const double> pixel(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }

  bool same_shape(const Field3& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

using ScoreField = Field3;
using MarginalField = Field3;

// Integer label per pixel; may contain the void code of the paired LabelSpace.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int h, int w, int fill = 0)
      : height(h), width(w), labels(static_cast<std::size_t>(h) * w, fill) {}

  int pixels() const { return height * width; }
  int& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
  int at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// 8-bit RGB image, interleaved channels.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  ImageU8() = default;
  ImageU8(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 0) {}

  int pixels() const { return height * width; }
  std::uint8_t& at(int y, int x, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

inline void require_same_shape(const Field3& a, const Field3& b, const char* what = "field pair") {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.height) + "x" + std::to_string(a.width) + "x" +
                                std::to_string(a.channels) + " vs " + std::to_string(b.height) +
                                "x" + std::to_string(b.width) + "x" + std::to_string(b.channels) +
                                ")");
}

inline void require_finite(const Field3& f, const char* what = "field") {
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < f.channels; ++c)
        if (!std::isfinite(f.at(y, x, c)))
          throw std::invalid_argument(std::string(what) + ": non-finite value at pixel (" +
                                      std::to_string(x) + "," + std::to_string(y) + ") channel " +
                                      std::to_string(c));
}

}  // namespace dcrf

#endif
