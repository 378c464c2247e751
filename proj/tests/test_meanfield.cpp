#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "dcrf/dataset.hpp"
#include "dcrf/enumeration.hpp"
#include "dcrf/meanfield.hpp"
#include "dcrf/netpbm.hpp"
#include "dcrf/rng.hpp"
#include "dcrf/softmax.hpp"

using namespace dcrf;

namespace {

ImageU8 random_image(int h, int w, std::uint64_t seed) {
  ImageU8 img(h, w);
  Rng rng(seed);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

ScoreField random_unary(int h, int w, int l, std::uint64_t seed, double amp = 2.0) {
  ScoreField u(h, w, l);
  Rng rng(seed);
  for (auto& v : u.values) v = rng.uniform(-amp, amp);
  return u;
}

PairwiseModel two_kernel_model(double w_bilateral, double w_spatial) {
  PairwiseModel model;
  model.kernels.push_back({KernelSpec{FeatureKind::bilateral, {8.0, 8.0, 20.0, 20.0, 20.0}}, w_bilateral});
  model.kernels.push_back({KernelSpec{FeatureKind::spatial, {3.0, 3.0}}, w_spatial});
  model.compat = potts();
  return model;
}

std::vector<FilterPlan> make_plans(const ImageU8& img, const PairwiseModel& model, FilterMode mode) {
  std::vector<FilterPlan> plans;
  for (const auto& k : model.kernels)
    plans.emplace_back(build_features(img, k.spec.kind), k.spec, mode);
  return plans;
}

std::vector<int> identity_order(int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

}  // namespace

TEST_CASE("initialization is the per-pixel softmax of the unary") {
  ScoreField u = random_unary(2, 3, 4, 81);
  MarginalField q = mf_init(u);
  MarginalField want = softmax_normalize(u);
  for (std::size_t i = 0; i < q.values.size(); ++i) CHECK(q.values[i] == want.values[i]);
}

TEST_CASE("a single pixel is already at its fixed point") {
  ImageU8 img = random_image(1, 1, 82);
  ScoreField u = random_unary(1, 1, 3, 83);
  PairwiseModel model = two_kernel_model(0.8, 0.3);
  auto plans = make_plans(img, model, FilterMode::brute);
  MfTrajectory traj = mf_infer(u, model, plans, {4, UpdateMode::parallel, FilterMode::brute});
  MarginalField want = softmax_normalize(u);
  for (const auto& q : traj.q)
    for (std::size_t i = 0; i < q.values.size(); ++i)
      CHECK(q.values[i] == doctest::Approx(want.values[i]).epsilon(1e-15));
}

TEST_CASE("zero kernel weights freeze inference at the initialization") {
  ImageU8 img = random_image(3, 4, 84);
  ScoreField u = random_unary(3, 4, 3, 85);
  PairwiseModel model = two_kernel_model(0.0, 0.0);
  auto plans = make_plans(img, model, FilterMode::brute);
  MfTrajectory traj = mf_infer(u, model, plans, {3, UpdateMode::parallel, FilterMode::brute});
  CHECK(traj.iterations() == 3);
  MarginalField init = mf_init(u);
  for (const auto& q : traj.q)
    for (std::size_t i = 0; i < q.values.size(); ++i)
      CHECK(q.values[i] == doctest::Approx(init.values[i]).epsilon(1e-14));
}

TEST_CASE("a parallel step on two pixels matches the closed form") {
  ImageU8 img(1, 2);
  ScoreField u(1, 2, 2);
  u.at(0, 0, 0) = 0.4;
  u.at(0, 0, 1) = -0.2;
  u.at(0, 1, 0) = -0.1;
  u.at(0, 1, 1) = 0.3;
  PairwiseModel model;
  model.kernels.push_back({KernelSpec{FeatureKind::spatial, {1.0, 1.0}}, 0.7});
  model.compat = potts();
  auto plans = make_plans(img, model, FilterMode::brute);
  MarginalField q = mf_init(u);
  MarginalField next = mf_step_parallel(q, u, model, plans);

  const double k = std::exp(-0.5);
  for (int i = 0; i < 2; ++i) {
    const int other = 1 - i;
    double logits[2], mx = -1e300;
    for (int l = 0; l < 2; ++l) {
      logits[l] = u.pixel(i)[l] + 0.7 * k * q.pixel(other)[l];
      mx = std::max(mx, logits[l]);
    }
    const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
    for (int l = 0; l < 2; ++l)
      CHECK(next.pixel(i)[l] == doctest::Approx(std::exp(logits[l] - mx) / z).epsilon(1e-14));
  }
}

TEST_CASE("the trajectory stores the responses that produced each step") {
  ImageU8 img = random_image(4, 4, 86);
  ScoreField u = random_unary(4, 4, 3, 87);
  PairwiseModel model = two_kernel_model(0.5, 0.2);
  auto plans = make_plans(img, model, FilterMode::brute);
  MfTrajectory traj = mf_infer(u, model, plans, {2, UpdateMode::parallel, FilterMode::brute});
  REQUIRE(traj.q.size() == 3);
  REQUIRE(traj.filtered.size() == 2);
  for (int t = 0; t < 2; ++t) {
    REQUIRE(traj.filtered[t].size() == 2);
    for (int m = 0; m < 2; ++m) {
      Field3 want = plans[m].apply(traj.q[t]);
      for (std::size_t i = 0; i < want.values.size(); ++i)
        CHECK(traj.filtered[t][m].values[i] == want.values[i]);
    }
  }
  CHECK(&traj.final_q() == &traj.q.back());
}

TEST_CASE("a sequential update reads marginals refreshed earlier in the sweep") {
  ImageU8 img(1, 2);
  ScoreField u(1, 2, 2);
  u.at(0, 0, 0) = 0.6;
  u.at(0, 0, 1) = -0.6;
  u.at(0, 1, 0) = -0.2;
  u.at(0, 1, 1) = 0.5;
  PairwiseModel model;
  model.kernels.push_back({KernelSpec{FeatureKind::spatial, {1.0, 1.0}}, 0.9});
  model.compat = potts();
  FeatureField feats = build_features(img, FeatureKind::spatial);
  MarginalField q = mf_init(u);
  const std::vector<int> order{0, 1};
  MarginalField next = mf_step_sequential(q, u, model, feats, order);

  const double k = std::exp(-0.5);
  // Pixel 0 sees the initial q1.
  double logits0[2];
  for (int l = 0; l < 2; ++l) logits0[l] = u.pixel(0)[l] + 0.9 * k * q.pixel(1)[l];
  const double z0 = std::exp(logits0[0]) + std::exp(logits0[1]);
  double q0[2] = {std::exp(logits0[0]) / z0, std::exp(logits0[1]) / z0};
  for (int l = 0; l < 2; ++l) CHECK(next.pixel(0)[l] == doctest::Approx(q0[l]).epsilon(1e-12));
  // Pixel 1 sees the freshly written q0, not the initial one.
  double logits1[2];
  for (int l = 0; l < 2; ++l) logits1[l] = u.pixel(1)[l] + 0.9 * k * q0[l];
  const double z1 = std::exp(logits1[0]) + std::exp(logits1[1]);
  for (int l = 0; l < 2; ++l)
    CHECK(next.pixel(1)[l] == doctest::Approx(std::exp(logits1[l]) / z1).epsilon(1e-12));

  MarginalField reversed = mf_step_sequential(q, u, model, feats, std::vector<int>{1, 0});
  CHECK(std::abs(reversed.at(0, 0, 0) - next.at(0, 0, 0)) > 1e-6);
}

TEST_CASE("sequential sweeps never increase the variational objective") {
  ImageU8 img = random_image(4, 4, 88);
  ScoreField u = random_unary(4, 4, 3, 89);
  PairwiseModel model = two_kernel_model(0.7, 0.4);
  FeatureField feats = build_features(img, FeatureKind::bilateral);
  MarginalField q = mf_init(u);
  double obj = variational_objective(q, u, model, feats);
  for (int sweep = 0; sweep < 6; ++sweep) {
    q = mf_step_sequential(q, u, model, feats, identity_order(16));
    const double next = variational_objective(q, u, model, feats);
    CHECK(next <= obj + 1e-12);
    obj = next;
  }
}

TEST_CASE("weak coupling stays close to the exact marginals") {
  ImageU8 img = random_image(1, 3, 90);
  ScoreField u = random_unary(1, 3, 3, 91);
  PairwiseModel model;
  model.kernels.push_back({KernelSpec{FeatureKind::spatial, {1.5, 1.5}}, 0.05});
  model.compat = potts();
  auto plans = make_plans(img, model, FilterMode::brute);
  MfTrajectory traj = mf_infer(u, model, plans, {10, UpdateMode::parallel, FilterMode::brute});
  FeatureField feats = build_features(img, FeatureKind::spatial);
  EnumeratedDistribution exact = enumerate_distribution(u, model, feats);
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.marginals.values.size(); ++i)
    worst = std::max(worst, std::abs(exact.marginals.values[i] - traj.final_q().values[i]));
  CHECK(worst < 5e-3);
}

TEST_CASE("lattice inference tracks brute inference on a dataset image") {
  const std::string dir = std::filesystem::temp_directory_path() / "dcrf_mf_lattice";
  synth_dataset(dir, 1, 16, 4, 25.0, 92);
  ImageU8 img = read_ppm(dir + "/img_0000.ppm");
  ScoreField u = random_unary(16, 16, 4, 93);
  PairwiseModel model = two_kernel_model(0.06, 0.006);
  auto brute = make_plans(img, model, FilterMode::brute);
  auto lattice = make_plans(img, model, FilterMode::lattice);
  MfTrajectory tb = mf_infer(u, model, brute, {5, UpdateMode::parallel, FilterMode::brute});
  MfTrajectory tl = mf_infer(u, model, lattice, {5, UpdateMode::parallel, FilterMode::lattice});
  double worst = 0.0;
  for (std::size_t i = 0; i < tb.final_q().values.size(); ++i)
    worst = std::max(worst, std::abs(tb.final_q().values[i] - tl.final_q().values[i]));
  CHECK(worst < 0.02);
}

TEST_CASE("zero iterations return the initialization alone") {
  ImageU8 img = random_image(2, 2, 94);
  ScoreField u = random_unary(2, 2, 2, 95);
  PairwiseModel model = two_kernel_model(0.5, 0.1);
  auto plans = make_plans(img, model, FilterMode::brute);
  MfTrajectory traj = mf_infer(u, model, plans, {0, UpdateMode::parallel, FilterMode::brute});
  CHECK(traj.iterations() == 0);
  CHECK(traj.q.size() == 1);
  CHECK(traj.filtered.empty());
}

TEST_CASE("mismatched setups are rejected") {
  ImageU8 img = random_image(2, 2, 96);
  ScoreField u = random_unary(2, 2, 2, 97);
  PairwiseModel model = two_kernel_model(0.5, 0.1);
  auto plans = make_plans(img, model, FilterMode::brute);

  MfConfig bad_mode{2, UpdateMode::sequential, FilterMode::brute};
  CHECK_THROWS_AS(mf_infer(u, model, plans, bad_mode), std::invalid_argument);

  MfConfig wrong_filter{2, UpdateMode::parallel, FilterMode::lattice};
  CHECK_THROWS_AS(mf_infer(u, model, plans, wrong_filter), std::invalid_argument);

  MfConfig negative{-1, UpdateMode::parallel, FilterMode::brute};
  CHECK_THROWS_AS(mf_infer(u, model, plans, negative), std::invalid_argument);

  PairwiseModel solo;
  solo.kernels.push_back(model.kernels[0]);
  solo.compat = potts();
  CHECK_THROWS_AS(mf_infer(u, solo, plans, MfConfig{2, UpdateMode::parallel, FilterMode::brute}),
                  std::invalid_argument);

  FeatureField feats = build_features(img, FeatureKind::bilateral);
  const std::vector<int> twice{0, 0, 1, 2};
  CHECK_THROWS_AS(mf_step_sequential(mf_init(u), u, model, feats, twice), std::invalid_argument);
}
