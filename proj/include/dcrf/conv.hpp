#ifndef DCRF_CONV_HPP
#define DCRF_CONV_HPP

#include <span>
#include <vector>

#include "dcrf/field.hpp"

namespace dcrf {

// Channel-major activation tensor used inside the convolutional provider.
struct TensorCHW {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  TensorCHW() = default;
  TensorCHW(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, fill) {}

  double& at(int c, int y, int x) { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::size_t size() const { return values.size(); }
};

struct ConvSpec {
  int out_channels = 0;
  int in_channels = 0;
  int ksize = 1;
  int stride = 1;
  int pad = 0;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * ksize * ksize;
  }
};

// Zero-padded cross-correlation. Output is (H + 2 pad - K) / stride + 1 per axis.
TensorCHW conv2d_forward(const TensorCHW& input, const ConvSpec& spec, std::span<const double> kernels,
                         std::span<const double> bias);

struct ConvGrads {
  TensorCHW d_input;
  std::vector<double> d_kernels;
  std::vector<double> d_bias;
};

ConvGrads conv2d_backward(const TensorCHW& input, const ConvSpec& spec, std::span<const double> kernels,
                          const TensorCHW& upstream);

TensorCHW relu_forward(const TensorCHW& input);
// Passes upstream where the activation is positive; the subgradient at 0 is 0.
TensorCHW relu_backward(const TensorCHW& activated, const TensorCHW& upstream);

// 2x2 stride-2 max pooling with ceil output sizes; edge windows shrink.
// argmax records the flat input index chosen per output cell, first maximal
// element in scan order on ties.
TensorCHW maxpool2_forward(const TensorCHW& input, std::vector<int>& argmax);
TensorCHW maxpool2_backward(int in_channels, int in_height, int in_width, std::span<const int> argmax,
                            const TensorCHW& upstream);

// Align-corners bilinear interpolation from a coarse label field to the full
// grid, and its exact transpose.
Field3 bilinear_upsample(const Field3& coarse, int height, int width);
Field3 bilinear_upsample_adjoint(const Field3& upstream, int coarse_height, int coarse_width);

}  // namespace dcrf

#endif
