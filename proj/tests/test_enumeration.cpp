#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dcrf/enumeration.hpp"
#include "dcrf/rng.hpp"
#include "dcrf/softmax.hpp"

using namespace dcrf;

namespace {

PairwiseModel spatial_potts(double sigma, double weight) {
  PairwiseModel model;
  model.kernels.push_back({KernelSpec{FeatureKind::spatial, {sigma, sigma}}, weight});
  model.compat = potts();
  return model;
}

FeatureField line_features(int n) {
  FeatureField feats(1, n, 2);
  for (int i = 0; i < n; ++i) {
    feats.pixel(i)[0] = i;
    feats.pixel(i)[1] = 0.0;
  }
  return feats;
}

}  // namespace

TEST_CASE("global score adds unaries and all unordered pair terms") {
  ScoreField unary(1, 2, 2);
  unary.at(0, 0, 0) = 0.2;
  unary.at(0, 0, 1) = -0.1;
  unary.at(0, 1, 0) = 0.4;
  unary.at(0, 1, 1) = 0.3;
  PairwiseModel model = spatial_potts(2.0, 0.8);
  FeatureField feats = line_features(2);
  const std::vector<int> same{0, 0}, diff{0, 1};
  CHECK(global_score(same, unary, model, feats) ==
        doctest::Approx(1.3059975220676765).epsilon(1e-14));
  CHECK(global_score(diff, unary, model, feats) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("two-pixel enumeration matches the hand-computed distribution") {
  ScoreField unary(1, 2, 2);
  unary.at(0, 0, 0) = 0.2;
  unary.at(0, 0, 1) = -0.1;
  unary.at(0, 1, 0) = 0.4;
  unary.at(0, 1, 1) = 0.3;
  PairwiseModel model = spatial_potts(2.0, 0.8);
  EnumeratedDistribution dist = enumerate_distribution(unary, model, line_features(2));
  CHECK(dist.log_partition == doctest::Approx(2.2153207951335636).epsilon(1e-13));
  CHECK(dist.marginals.at(0, 0, 0) == doctest::Approx(0.582702713694621).epsilon(1e-13));
  CHECK(dist.marginals.at(0, 0, 1) == doctest::Approx(0.41729728630537904).epsilon(1e-13));
  CHECK(dist.marginals.at(0, 1, 0) == doctest::Approx(0.5500912888322577).epsilon(1e-13));
  CHECK(dist.marginals.at(0, 1, 1) == doctest::Approx(0.44990871116774245).epsilon(1e-13));
}

TEST_CASE("marginals sum to one at every pixel") {
  Rng rng(21);
  ScoreField unary(2, 2, 3);
  for (auto& v : unary.values) v = rng.uniform(-2.0, 2.0);
  PairwiseModel model = spatial_potts(1.5, 0.5);
  FeatureField feats(2, 2, 2);
  for (int i = 0; i < 4; ++i) {
    feats.pixel(i)[0] = i % 2;
    feats.pixel(i)[1] = i / 2;
  }
  EnumeratedDistribution dist = enumerate_distribution(unary, model, feats);
  for (int i = 0; i < 4; ++i) {
    double total = 0.0;
    for (int l = 0; l < 3; ++l) total += dist.marginals.pixel(i)[l];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("a constant shift of one pixel's unary shifts the partition only") {
  Rng rng(22);
  ScoreField unary(1, 3, 2);
  for (auto& v : unary.values) v = rng.uniform(-1.0, 1.0);
  PairwiseModel model = spatial_potts(1.0, 0.6);
  FeatureField feats = line_features(3);
  EnumeratedDistribution base = enumerate_distribution(unary, model, feats);
  ScoreField shifted = unary;
  shifted.at(0, 1, 0) += 0.9;
  shifted.at(0, 1, 1) += 0.9;
  EnumeratedDistribution moved = enumerate_distribution(shifted, model, feats);
  CHECK(moved.log_partition == doctest::Approx(base.log_partition + 0.9).epsilon(1e-12));
  for (std::size_t i = 0; i < base.marginals.values.size(); ++i)
    CHECK(moved.marginals.values[i] == doctest::Approx(base.marginals.values[i]).epsilon(1e-12));
}

TEST_CASE("zero coupling factorizes into independent softmaxes") {
  Rng rng(23);
  ScoreField unary(1, 3, 3);
  for (auto& v : unary.values) v = rng.uniform(-2.0, 2.0);
  PairwiseModel model = spatial_potts(1.0, 0.0);
  EnumeratedDistribution dist = enumerate_distribution(unary, model, line_features(3));
  MarginalField independent = softmax_normalize(unary);
  double expected_logz = 0.0;
  for (int i = 0; i < 3; ++i) {
    double m = unary.pixel(i)[0];
    for (int l = 1; l < 3; ++l) m = std::max(m, unary.pixel(i)[l]);
    double z = 0.0;
    for (int l = 0; l < 3; ++l) z += std::exp(unary.pixel(i)[l] - m);
    expected_logz += m + std::log(z);
    for (int l = 0; l < 3; ++l)
      CHECK(dist.marginals.pixel(i)[l] == doctest::Approx(independent.pixel(i)[l]).epsilon(1e-12));
  }
  CHECK(dist.log_partition == doctest::Approx(expected_logz).epsilon(1e-12));
}

TEST_CASE("state spaces past the guard are rejected") {
  // 21 pixels at 3 labels exceeds the 1e6 state guard.
  ScoreField unary(1, 21, 3);
  PairwiseModel model = spatial_potts(1.0, 0.1);
  CHECK_THROWS_AS(enumerate_distribution(unary, model, line_features(21)), std::invalid_argument);
}
