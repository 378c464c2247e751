#include "dcrf/enumeration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcrf {

namespace {

// Mixture kernel value for every unordered pair, so enumeration does not
// re-evaluate exponentials per labeling.
std::vector<double> pair_mixture(const PairwiseModel& model, const FeatureField& feats) {
  const int n = feats.pixels();
  std::vector<double> mix(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto fi = feats.pixel(i);
    for (int j = i + 1; j < n; ++j) {
      const auto fj = feats.pixel(j);
      double v = 0.0;
      for (const auto& k : model.kernels) {
        const std::size_t d = k.spec.sigma.size();
        v += k.weight * kernel_value(fi.first(d), fj.first(d), k.spec);
      }
      mix[static_cast<std::size_t>(i) * n + j] = v;
      mix[static_cast<std::size_t>(j) * n + i] = v;
    }
  }
  return mix;
}

double score_with_mixture(std::span<const int> y, const ScoreField& unary, const PairwiseModel& model,
                          std::span<const double> mix) {
  const int n = unary.height * unary.width;
  const int L = unary.channels;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += unary.values[static_cast<std::size_t>(i) * L + y[i]];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      s += model.compat(y[i], y[j]) * mix[static_cast<std::size_t>(i) * n + j];
  return s;
}

}  // namespace

double global_score(std::span<const int> assignment, const ScoreField& unary, const PairwiseModel& model,
                    const FeatureField& feats) {
  const int n = unary.height * unary.width;
  if (n > 16) throw std::invalid_argument("global score enumeration is limited to 16 pixels");
  if (static_cast<int>(assignment.size()) != n) throw std::invalid_argument("assignment length does not match grid");
  if (feats.height != unary.height || feats.width != unary.width)
    throw std::invalid_argument("features and unary cover different grids");
  const int L = unary.channels;
  for (int y : assignment)
    if (y < 0 || y >= L) throw std::invalid_argument("assignment uses a label outside the label set");
  model.validate(L);
  const auto mix = pair_mixture(model, feats);
  return score_with_mixture(assignment, unary, model, mix);
}

EnumeratedDistribution enumerate_distribution(const ScoreField& unary, const PairwiseModel& model,
                                              const FeatureField& feats) {
  const int n = unary.height * unary.width;
  const int L = unary.channels;
  if (feats.height != unary.height || feats.width != unary.width)
    throw std::invalid_argument("features and unary cover different grids");
  model.validate(L);
  double states = 1.0;
  for (int i = 0; i < n; ++i) states *= L;
  if (states > 1e6) throw std::invalid_argument("state space exceeds the enumeration limit of 1e6");
  const long total = static_cast<long>(states);

  const auto mix = pair_mixture(model, feats);
  std::vector<int> y(n, 0);

  auto advance = [&]() {
    for (int i = 0; i < n; ++i) {
      if (++y[i] < L) return true;
      y[i] = 0;
    }
    return false;
  };

  double max_score = -std::numeric_limits<double>::infinity();
  for (long s = 0; s < total; ++s) {
    max_score = std::max(max_score, score_with_mixture(y, unary, model, mix));
    advance();
  }

  EnumeratedDistribution result;
  result.marginals = MarginalField(unary.height, unary.width, L, 0.0);
  std::fill(y.begin(), y.end(), 0);
  double z = 0.0;
  for (long s = 0; s < total; ++s) {
    const double p = std::exp(score_with_mixture(y, unary, model, mix) - max_score);
    z += p;
    for (int i = 0; i < n; ++i) result.marginals.values[static_cast<std::size_t>(i) * L + y[i]] += p;
    advance();
  }
  for (double& v : result.marginals.values) v /= z;
  result.log_partition = max_score + std::log(z);
  return result;
}

}  // namespace dcrf
