#include "dcrf/unary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcrf/features.hpp"

namespace dcrf {

void UnaryProvider::zero_grad() {
  for (auto& p : params()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

LinearUnary::LinearUnary(int num_labels) : num_labels_(num_labels) {
  if (num_labels <= 0) throw std::invalid_argument("label count must be positive");
  ParamTensor w;
  w.name = "weight";
  w.group = "top";
  w.value.assign(static_cast<std::size_t>(kFeatureDim + 1) * num_labels, 0.0);
  w.grad.assign(w.value.size(), 0.0);
  params_.push_back(std::move(w));
  mean_.assign(kFeatureDim, 0.0);
  stdev_.assign(kFeatureDim, 1.0);
}

void LinearUnary::set_standardization(const std::vector<double>& mean, const std::vector<double>& stdev) {
  if (mean.size() != kFeatureDim || stdev.size() != kFeatureDim)
    throw std::invalid_argument("standardization statistics must cover all features");
  for (double s : stdev)
    if (!(s > 0.0)) throw std::invalid_argument("feature standard deviations must be positive");
  mean_ = mean;
  stdev_ = stdev;
}

ScoreField LinearUnary::forward(const ImageU8& image) {
  FeatureField raw = build_features(image, FeatureKind::bilateral);
  Field3 feats(image.height, image.width, kFeatureDim);
  const int n = image.height * image.width;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < kFeatureDim; ++d)
      feats.values[static_cast<std::size_t>(i) * kFeatureDim + d] =
          (raw.values[static_cast<std::size_t>(i) * kFeatureDim + d] - mean_[d]) / stdev_[d];

  const double* w = params_[0].value.data();
  const int L = num_labels_;
  ScoreField scores(image.height, image.width, L);
  for (int i = 0; i < n; ++i) {
    const double* f = feats.values.data() + static_cast<std::size_t>(i) * kFeatureDim;
    double* s = scores.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) {
      double acc = w[static_cast<std::size_t>(kFeatureDim) * L + l];
      for (int d = 0; d < kFeatureDim; ++d) acc += w[static_cast<std::size_t>(d) * L + l] * f[d];
      s[l] = acc;
    }
  }
  cache_ = std::move(feats);
  return scores;
}

void LinearUnary::backward(const Field3& d_scores) {
  if (!cache_) throw std::logic_error("backward called without a cached forward");
  const Field3& feats = *cache_;
  if (d_scores.height != feats.height || d_scores.width != feats.width || d_scores.channels != num_labels_)
    throw std::invalid_argument("score gradient shape does not match the cached forward");
  double* g = params_[0].grad.data();
  const int n = feats.height * feats.width;
  const int L = num_labels_;
  for (int i = 0; i < n; ++i) {
    const double* f = feats.values.data() + static_cast<std::size_t>(i) * kFeatureDim;
    const double* ds = d_scores.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) {
      for (int d = 0; d < kFeatureDim; ++d) g[static_cast<std::size_t>(d) * L + l] += f[d] * ds[l];
      g[static_cast<std::size_t>(kFeatureDim) * L + l] += ds[l];
    }
  }
  cache_.reset();
}

std::unique_ptr<UnaryProvider> LinearUnary::clone() const { return std::make_unique<LinearUnary>(*this); }

namespace {

ParamTensor glorot_tensor(const std::string& name, const std::string& group, const ConvSpec& spec, Rng& rng) {
  ParamTensor t;
  t.name = name;
  t.group = group;
  const double fan_in = static_cast<double>(spec.in_channels) * spec.ksize * spec.ksize;
  const double fan_out = static_cast<double>(spec.out_channels) * spec.ksize * spec.ksize;
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  t.value.resize(spec.weight_count());
  for (double& v : t.value) v = rng.uniform(-limit, limit);
  t.grad.assign(t.value.size(), 0.0);
  return t;
}

ParamTensor zero_tensor(const std::string& name, const std::string& group, std::size_t size) {
  ParamTensor t;
  t.name = name;
  t.group = group;
  t.value.assign(size, 0.0);
  t.grad.assign(size, 0.0);
  return t;
}

TensorCHW image_to_chw(const ImageU8& image) {
  TensorCHW x(3, image.height, image.width);
  const int n = image.height * image.width;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      x.values[static_cast<std::size_t>(c) * n + i] = image.rgb[static_cast<std::size_t>(i) * 3 + c] / 255.0;
  return x;
}

Field3 chw_to_field(const TensorCHW& t) {
  Field3 f(t.height, t.width, t.channels);
  const int n = t.height * t.width;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < t.channels; ++c)
      f.values[static_cast<std::size_t>(i) * t.channels + c] = t.values[static_cast<std::size_t>(c) * n + i];
  return f;
}

TensorCHW field_to_chw(const Field3& f) {
  TensorCHW t(f.channels, f.height, f.width);
  const int n = f.height * f.width;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < f.channels; ++c)
      t.values[static_cast<std::size_t>(c) * n + i] = f.values[static_cast<std::size_t>(i) * f.channels + c];
  return t;
}

}  // namespace

ConvNetUnary::ConvNetUnary(int num_labels, std::uint64_t seed) : num_labels_(num_labels) {
  if (num_labels <= 0) throw std::invalid_argument("label count must be positive");
  specs_ = {
      ConvSpec{16, 3, 3, 1, 1},
      ConvSpec{16, 16, 3, 1, 1},
      ConvSpec{32, 16, 3, 1, 1},
      ConvSpec{num_labels, 32, 1, 1, 0},
  };
  Rng rng(seed);
  const char* names[] = {"conv1", "conv2", "conv3", "conv4"};
  for (int i = 0; i < 4; ++i) {
    const std::string group = i == 3 ? "top" : "body";
    params_.push_back(glorot_tensor(std::string(names[i]) + ".weight", group, specs_[i], rng));
    params_.push_back(zero_tensor(std::string(names[i]) + ".bias", group, specs_[i].out_channels));
  }
}

ScoreField ConvNetUnary::forward(const ImageU8& image) {
  if (image.height < 2 || image.width < 2) throw std::invalid_argument("convnet needs at least a 2x2 image");
  Cache c;
  c.image_height = image.height;
  c.image_width = image.width;
  c.input = image_to_chw(image);
  c.act1 = relu_forward(conv2d_forward(c.input, specs_[0], params_[0].value, params_[1].value));
  c.act2 = relu_forward(conv2d_forward(c.act1, specs_[1], params_[2].value, params_[3].value));
  c.pooled = maxpool2_forward(c.act2, c.pool_argmax);
  c.act3 = relu_forward(conv2d_forward(c.pooled, specs_[2], params_[4].value, params_[5].value));
  TensorCHW coarse = conv2d_forward(c.act3, specs_[3], params_[6].value, params_[7].value);
  ScoreField scores = bilinear_upsample(chw_to_field(coarse), image.height, image.width);
  cache_ = std::move(c);
  return scores;
}

void ConvNetUnary::backward(const Field3& d_scores) {
  if (!cache_) throw std::logic_error("backward called without a cached forward");
  Cache& c = *cache_;
  if (d_scores.height != c.image_height || d_scores.width != c.image_width || d_scores.channels != num_labels_)
    throw std::invalid_argument("score gradient shape does not match the cached forward");

  TensorCHW d_coarse = field_to_chw(bilinear_upsample_adjoint(d_scores, c.act3.height, c.act3.width));

  ConvGrads g4 = conv2d_backward(c.act3, specs_[3], params_[6].value, d_coarse);
  TensorCHW d_act3 = relu_backward(c.act3, g4.d_input);
  ConvGrads g3 = conv2d_backward(c.pooled, specs_[2], params_[4].value, d_act3);
  TensorCHW d_act2 =
      relu_backward(c.act2, maxpool2_backward(c.act2.channels, c.act2.height, c.act2.width, c.pool_argmax, g3.d_input));
  ConvGrads g2 = conv2d_backward(c.act1, specs_[1], params_[2].value, d_act2);
  TensorCHW d_act1 = relu_backward(c.act1, g2.d_input);
  ConvGrads g1 = conv2d_backward(c.input, specs_[0], params_[0].value, d_act1);

  const ConvGrads* grads[] = {&g1, &g2, &g3, &g4};
  for (int i = 0; i < 4; ++i) {
    auto& w = params_[static_cast<std::size_t>(2) * i].grad;
    auto& b = params_[static_cast<std::size_t>(2) * i + 1].grad;
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += grads[i]->d_kernels[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += grads[i]->d_bias[k];
  }
  cache_.reset();
}

std::unique_ptr<UnaryProvider> ConvNetUnary::clone() const { return std::make_unique<ConvNetUnary>(*this); }

std::unique_ptr<UnaryProvider> make_unary(const std::string& kind, int num_labels, std::uint64_t seed) {
  if (kind == "linear") return std::make_unique<LinearUnary>(num_labels);
  if (kind == "convnet") return std::make_unique<ConvNetUnary>(num_labels, seed);
  throw std::invalid_argument("unknown unary kind: " + kind);
}

}  // namespace dcrf
