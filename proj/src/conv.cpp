#include "dcrf/conv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dcrf {

namespace {

void check_conv(const TensorCHW& input, const ConvSpec& spec, std::span<const double> kernels,
                std::span<const double> bias) {
  if (input.channels != spec.in_channels)
    throw std::invalid_argument("convolution expects " + std::to_string(spec.in_channels) + " input channels, got " +
                                std::to_string(input.channels));
  if (kernels.size() != spec.weight_count()) throw std::invalid_argument("kernel buffer size does not match the spec");
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(spec.out_channels))
    throw std::invalid_argument("bias size does not match the output channel count");
  if (input.height + 2 * spec.pad < spec.ksize || input.width + 2 * spec.pad < spec.ksize)
    throw std::invalid_argument("input is smaller than the kernel window");
}

}  // namespace

TensorCHW conv2d_forward(const TensorCHW& input, const ConvSpec& spec, std::span<const double> kernels,
                         std::span<const double> bias) {
  check_conv(input, spec, kernels, bias);
  const int K = spec.ksize;
  const int oh = (input.height + 2 * spec.pad - K) / spec.stride + 1;
  const int ow = (input.width + 2 * spec.pad - K) / spec.stride + 1;
  TensorCHW out(spec.out_channels, oh, ow);
  for (int o = 0; o < spec.out_channels; ++o) {
    const double b = bias.empty() ? 0.0 : bias[o];
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b;
        const int y0 = oy * spec.stride - spec.pad;
        const int x0 = ox * spec.stride - spec.pad;
        for (int c = 0; c < spec.in_channels; ++c)
          for (int ky = 0; ky < K; ++ky) {
            const int y = y0 + ky;
            if (y < 0 || y >= input.height) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int x = x0 + kx;
              if (x < 0 || x >= input.width) continue;
              acc += kernels[((static_cast<std::size_t>(o) * spec.in_channels + c) * K + ky) * K + kx] *
                     input.at(c, y, x);
            }
          }
        out.at(o, oy, ox) = acc;
      }
  }
  return out;
}

ConvGrads conv2d_backward(const TensorCHW& input, const ConvSpec& spec, std::span<const double> kernels,
                          const TensorCHW& upstream) {
  check_conv(input, spec, kernels, {});
  const int K = spec.ksize;
  const int oh = (input.height + 2 * spec.pad - K) / spec.stride + 1;
  const int ow = (input.width + 2 * spec.pad - K) / spec.stride + 1;
  if (upstream.channels != spec.out_channels || upstream.height != oh || upstream.width != ow)
    throw std::invalid_argument("upstream shape does not match the convolution output");

  ConvGrads g;
  g.d_input = TensorCHW(input.channels, input.height, input.width);
  g.d_kernels.assign(spec.weight_count(), 0.0);
  g.d_bias.assign(spec.out_channels, 0.0);

  for (int o = 0; o < spec.out_channels; ++o)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double up = upstream.at(o, oy, ox);
        if (up == 0.0) continue;
        g.d_bias[o] += up;
        const int y0 = oy * spec.stride - spec.pad;
        const int x0 = ox * spec.stride - spec.pad;
        for (int c = 0; c < spec.in_channels; ++c)
          for (int ky = 0; ky < K; ++ky) {
            const int y = y0 + ky;
            if (y < 0 || y >= input.height) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int x = x0 + kx;
              if (x < 0 || x >= input.width) continue;
              const std::size_t widx = ((static_cast<std::size_t>(o) * spec.in_channels + c) * K + ky) * K + kx;
              g.d_kernels[widx] += up * input.at(c, y, x);
              g.d_input.at(c, y, x) += up * kernels[widx];
            }
          }
      }
  return g;
}

TensorCHW relu_forward(const TensorCHW& input) {
  TensorCHW out = input;
  for (double& v : out.values)
    if (v < 0.0) v = 0.0;
  return out;
}

TensorCHW relu_backward(const TensorCHW& activated, const TensorCHW& upstream) {
  if (activated.values.size() != upstream.values.size())
    throw std::invalid_argument("activation and upstream sizes differ");
  TensorCHW out = upstream;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (activated.values[i] <= 0.0) out.values[i] = 0.0;
  return out;
}

TensorCHW maxpool2_forward(const TensorCHW& input, std::vector<int>& argmax) {
  const int oh = (input.height + 1) / 2;
  const int ow = (input.width + 1) / 2;
  TensorCHW out(input.channels, oh, ow);
  argmax.assign(out.size(), -1);
  for (int c = 0; c < input.channels; ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int dy = 0; dy < 2; ++dy) {
          const int y = 2 * oy + dy;
          if (y >= input.height) break;
          for (int dx = 0; dx < 2; ++dx) {
            const int x = 2 * ox + dx;
            if (x >= input.width) break;
            const double v = input.at(c, y, x);
            if (v > best) {
              best = v;
              best_idx = (static_cast<int>(c) * input.height + y) * input.width + x;
            }
          }
        }
        out.at(c, oy, ox) = best;
        argmax[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = best_idx;
      }
  return out;
}

TensorCHW maxpool2_backward(int in_channels, int in_height, int in_width, std::span<const int> argmax,
                            const TensorCHW& upstream) {
  if (argmax.size() != upstream.values.size())
    throw std::invalid_argument("argmax record does not match the upstream shape");
  TensorCHW out(in_channels, in_height, in_width);
  for (std::size_t i = 0; i < argmax.size(); ++i) out.values[argmax[i]] += upstream.values[i];
  return out;
}

namespace {

// Align-corners source position for a fine index. The last fine index pins to
// the last coarse cell exactly, so rounding in the scale cannot shift corners.
void interp_coords(int fine, int fine_size, int coarse_size, int& lo, int& hi, double& frac) {
  if (fine_size == 1 || coarse_size == 1) {
    lo = hi = 0;
    frac = 0.0;
    return;
  }
  if (fine == fine_size - 1) {
    lo = hi = coarse_size - 1;
    frac = 0.0;
    return;
  }
  const double pos = fine * (static_cast<double>(coarse_size - 1) / (fine_size - 1));
  lo = std::min(static_cast<int>(pos), coarse_size - 2);
  hi = lo + 1;
  frac = pos - lo;
}

}  // namespace

Field3 bilinear_upsample(const Field3& coarse, int height, int width) {
  if (height < coarse.height || width < coarse.width)
    throw std::invalid_argument("upsample target is smaller than the source");
  if (height == coarse.height && width == coarse.width) return coarse;
  const int L = coarse.channels;
  Field3 out(height, width, L);
  for (int y = 0; y < height; ++y) {
    int y0, y1;
    double wy;
    interp_coords(y, height, coarse.height, y0, y1, wy);
    for (int x = 0; x < width; ++x) {
      int x0, x1;
      double wx;
      interp_coords(x, width, coarse.width, x0, x1, wx);
      for (int l = 0; l < L; ++l)
        out.at(y, x, l) = (1 - wy) * ((1 - wx) * coarse.at(y0, x0, l) + wx * coarse.at(y0, x1, l)) +
                          wy * ((1 - wx) * coarse.at(y1, x0, l) + wx * coarse.at(y1, x1, l));
    }
  }
  return out;
}

Field3 bilinear_upsample_adjoint(const Field3& upstream, int coarse_height, int coarse_width) {
  if (upstream.height < coarse_height || upstream.width < coarse_width)
    throw std::invalid_argument("upsample target is smaller than the source");
  if (upstream.height == coarse_height && upstream.width == coarse_width) return upstream;
  const int L = upstream.channels;
  Field3 out(coarse_height, coarse_width, L, 0.0);
  for (int y = 0; y < upstream.height; ++y) {
    int y0, y1;
    double wy;
    interp_coords(y, upstream.height, coarse_height, y0, y1, wy);
    for (int x = 0; x < upstream.width; ++x) {
      int x0, x1;
      double wx;
      interp_coords(x, upstream.width, coarse_width, x0, x1, wx);
      for (int l = 0; l < L; ++l) {
        const double up = upstream.at(y, x, l);
        out.at(y0, x0, l) += (1 - wy) * (1 - wx) * up;
        out.at(y0, x1, l) += (1 - wy) * wx * up;
        out.at(y1, x0, l) += wy * (1 - wx) * up;
        out.at(y1, x1, l) += wy * wx * up;
      }
    }
  }
  return out;
}

}  // namespace dcrf
