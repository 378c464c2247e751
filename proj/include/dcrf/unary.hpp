#ifndef DCRF_UNARY_HPP
#define DCRF_UNARY_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcrf/conv.hpp"
#include "dcrf/field.hpp"
#include "dcrf/rng.hpp"

namespace dcrf {

struct ParamTensor {
  std::string name;
  std::string group;  // "top" or "body"
  std::vector<double> value;
  std::vector<double> grad;
};

// Differentiable map from an image to per-pixel label scores. forward caches
// activations; backward consumes exactly one matching cache and accumulates
// into the parameter grads.
class UnaryProvider {
 public:
  virtual ~UnaryProvider() = default;

  virtual ScoreField forward(const ImageU8& image) = 0;
  virtual void backward(const Field3& d_scores) = 0;
  virtual std::vector<ParamTensor>& params() = 0;
  virtual const std::vector<ParamTensor>& params() const = 0;
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<UnaryProvider> clone() const = 0;
  virtual int num_labels() const = 0;

  void zero_grad();
};

// Per-pixel logistic scores over standardized (x, y, r, g, b) features plus a
// bias. Standardization statistics come from the training split and travel
// with the checkpoint.
class LinearUnary : public UnaryProvider {
 public:
  static constexpr int kFeatureDim = 5;

  explicit LinearUnary(int num_labels);

  ScoreField forward(const ImageU8& image) override;
  void backward(const Field3& d_scores) override;
  std::vector<ParamTensor>& params() override { return params_; }
  const std::vector<ParamTensor>& params() const override { return params_; }
  std::string kind() const override { return "linear"; }
  std::unique_ptr<UnaryProvider> clone() const override;
  int num_labels() const override { return num_labels_; }

  void set_standardization(const std::vector<double>& mean, const std::vector<double>& stdev);
  const std::vector<double>& feature_mean() const { return mean_; }
  const std::vector<double>& feature_std() const { return stdev_; }

 private:
  int num_labels_;
  std::vector<ParamTensor> params_;  // one tensor: (kFeatureDim+1) x L, bias last row
  std::vector<double> mean_, stdev_;
  std::optional<Field3> cache_;  // standardized features
};

// Small fixed convnet emitting half-resolution scores, upsampled to the image
// grid: conv3x3(3->16) relu, conv3x3(16->16) relu, maxpool2, conv3x3(16->32)
// relu, conv1x1(32->L). The last conv is the "top" group.
class ConvNetUnary : public UnaryProvider {
 public:
  ConvNetUnary(int num_labels, std::uint64_t seed);

  ScoreField forward(const ImageU8& image) override;
  void backward(const Field3& d_scores) override;
  std::vector<ParamTensor>& params() override { return params_; }
  const std::vector<ParamTensor>& params() const override { return params_; }
  std::string kind() const override { return "convnet"; }
  std::unique_ptr<UnaryProvider> clone() const override;
  int num_labels() const override { return num_labels_; }

 private:
  struct Cache {
    TensorCHW input, act1, act2, pooled, act3;
    std::vector<int> pool_argmax;
    int image_height = 0, image_width = 0;
  };

  int num_labels_;
  std::vector<ParamTensor> params_;
  std::vector<ConvSpec> specs_;
  std::optional<Cache> cache_;
};

std::unique_ptr<UnaryProvider> make_unary(const std::string& kind, int num_labels, std::uint64_t seed);

}  // namespace dcrf

#endif
