#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "dcrf/errors.hpp"
#include "dcrf/softmax.hpp"
#include "dcrf/trainer.hpp"

using namespace dcrf;

namespace {

std::string temp_dir(const std::string& leaf) {
  return (std::filesystem::temp_directory_path() / leaf).string();
}

RunConfig base_config(int labels, const std::string& unary) {
  RunConfig cfg = parse_run_config(R"({"labels": 2})", "test");
  cfg.labels = labels;
  cfg.unary = unary;
  cfg.crf.kernels[0].sigma = {2.0, 2.0};
  cfg.crf.kernels[0].weight = 0.05;
  cfg.crf.kernels[1].sigma = {6.0, 6.0, 25.0, 25.0, 25.0};
  cfg.crf.kernels[1].weight = 0.01;
  cfg.crf.iterations = 3;
  cfg.crf.filter_mode = FilterMode::brute;
  cfg.optimizer.lr_top = 0.05;
  cfg.optimizer.lr_body = 0.01;
  cfg.optimizer.lr_crf = 0.001;
  return cfg;
}

std::vector<Sample> load_all(const Manifest& manifest) {
  std::vector<Sample> samples;
  for (const auto& e : manifest.entries) samples.push_back(load_sample(e));
  return samples;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("build_state wires the provider and pairwise model from the config") {
  ModelState state = build_state(base_config(3, "linear"));
  CHECK(state.provider->kind() == "linear");
  CHECK(state.provider->num_labels() == 3);
  REQUIRE(state.pairwise.kernels.size() == 2);
  CHECK(state.pairwise.kernels[0].weight == 0.05);
  CHECK(state.optimizer.settings().learning_rate.at("crf") == 0.001);
  CHECK(state.epoch == 0);
  CHECK(state.best_miou == -1.0);
}

TEST_CASE("checkpoints restore parameters, velocities, and counters bitwise") {
  RunConfig cfg = base_config(3, "linear");
  ModelState state = build_state(cfg);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_ckpt"), 2, 16, 3, 20.0, 401);
  std::vector<Sample> batch = load_all(manifest);
  train_step(batch, state, true);
  train_step(batch, state, true);
  state.epoch = 2;
  state.best_miou = 0.5;

  Checkpoint ckpt = state_to_checkpoint(state);
  ModelState resumed = resume_state(cfg, ckpt);
  Checkpoint again = state_to_checkpoint(resumed);
  CHECK(again.serialize() == ckpt.serialize());
  CHECK(resumed.epoch == 2);
  CHECK(resumed.step == 2);
  CHECK(resumed.best_miou == 0.5);

  // The next step continues identically on both states.
  StepOutcome a = train_step(batch, state, true);
  StepOutcome b = train_step(batch, resumed, true);
  CHECK(a.loss == b.loss);
  CHECK(state_to_checkpoint(state).serialize() == state_to_checkpoint(resumed).serialize());
}

TEST_CASE("state_from_checkpoint rebuilds from the embedded config") {
  ModelState state = build_state(base_config(3, "linear"));
  Checkpoint ckpt = state_to_checkpoint(state);
  ModelState rebuilt = state_from_checkpoint(ckpt);
  CHECK(rebuilt.config.labels == 3);
  CHECK(state_to_checkpoint(rebuilt).serialize() == ckpt.serialize());
}

TEST_CASE("a checkpoint refuses to resume into a mismatched architecture") {
  ModelState state = build_state(base_config(3, "linear"));
  Checkpoint ckpt = state_to_checkpoint(state);
  CHECK_THROWS_AS(resume_state(base_config(4, "linear"), ckpt), DataError);
}

TEST_CASE("a zero learning rate leaves its group bitwise untouched") {
  RunConfig cfg = base_config(3, "convnet");
  cfg.optimizer.lr_body = 0.0;
  ModelState state = build_state(cfg);
  std::vector<std::vector<double>> before;
  for (const auto& p : state.provider->params())
    if (p.group == "body") before.push_back(p.value);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_freeze"), 1, 16, 3, 20.0, 402);
  std::vector<Sample> batch = load_all(manifest);
  train_step(batch, state, false);
  train_step(batch, state, false);
  std::size_t seen = 0;
  bool top_moved = false;
  for (const auto& p : state.provider->params()) {
    if (p.group == "body") {
      CHECK(p.value == before[seen]);
      ++seen;
    } else {
      for (std::size_t i = 0; i < p.value.size(); ++i) top_moved = top_moved || p.value[i] != 0.0;
    }
  }
  CHECK(seen == before.size());
  CHECK(top_moved);
}

TEST_CASE("zero kernel weights make a CRF step equal a plain softmax step") {
  RunConfig cfg = base_config(3, "linear");
  cfg.crf.kernels[0].weight = 0.0;
  cfg.crf.kernels[1].weight = 0.0;
  ModelState with_crf = build_state(cfg);
  ModelState without = build_state(cfg);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_wzero"), 2, 12, 3, 20.0, 403);
  std::vector<Sample> batch = load_all(manifest);

  StepOutcome a = train_step(batch, with_crf, true);
  StepOutcome b = train_step(batch, without, false);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  CHECK(a.counted_pixels == b.counted_pixels);
  CHECK(max_abs_diff(with_crf.provider->params()[0].value, without.provider->params()[0].value) < 1e-12);
}

TEST_CASE("repeated full-batch steps drive the loss down") {
  RunConfig cfg = base_config(3, "linear");
  cfg.optimizer.momentum = 0.0;
  cfg.optimizer.weight_decay = 0.0;
  cfg.optimizer.lr_top = 0.1;
  ModelState state = build_state(cfg);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_descent"), 3, 16, 3, 20.0, 404);
  standardize_linear(state, manifest);
  std::vector<Sample> batch = load_all(manifest);
  double prev = train_step(batch, state, false).loss;
  int improved = 0;
  for (int s = 0; s < 50; ++s) {
    const double loss = train_step(batch, state, false).loss;
    if (loss < prev) ++improved;
    prev = loss;
  }
  CHECK(improved >= 48);
}

TEST_CASE("prediction without the CRF is the softmax of the unary") {
  ModelState state = build_state(base_config(3, "linear"));
  // Zero weights score every label equally and uniform marginals are a
  // mean-field fixed point, so give the unary some texture first.
  std::vector<ParamTensor>& params = state.provider->params();
  for (std::size_t i = 0; i < params[0].value.size(); ++i)
    params[0].value[i] = 0.05 * static_cast<double>(static_cast<int>(i % 7) - 3);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_pred"), 1, 12, 3, 20.0, 405);
  Sample sample = load_sample(manifest.entries[0]);
  MarginalField off = predict_marginals(state, sample.image, false);
  ScoreField scores = state.provider->forward(sample.image);
  MarginalField want = softmax_normalize(scores);
  for (std::size_t i = 0; i < off.values.size(); ++i) CHECK(off.values[i] == want.values[i]);
  MarginalField on = predict_marginals(state, sample.image, true);
  double moved = 0.0;
  for (std::size_t i = 0; i < on.values.size(); ++i)
    moved = std::max(moved, std::abs(on.values[i] - off.values[i]));
  CHECK(moved > 0.0);
}

TEST_CASE("evaluation reports a finite loss and a bounded mean IoU") {
  ModelState state = build_state(base_config(3, "linear"));
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_eval"), 2, 12, 3, 20.0, 406);
  EvalOutcome out = evaluate(manifest, state, true);
  CHECK(std::isfinite(out.mean_loss));
  CHECK(out.miou >= 0.0);
  CHECK(out.miou <= 1.0);
}

TEST_CASE("bandwidths cannot cross the positivity floor") {
  RunConfig cfg = base_config(2, "linear");
  cfg.optimizer.lr_crf = 1e9;  // huge rate so one step would turn sigma negative
  cfg.crf.kernels[0].weight = 0.3;
  cfg.crf.kernels[1].weight = 0.3;
  cfg.crf.sigma_grad = SigmaGradMode::brute;
  ModelState state = build_state(cfg);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_floor"), 1, 12, 2, 20.0, 407);
  std::vector<Sample> batch = load_all(manifest);
  train_step(batch, state, true);
  for (const auto& k : state.pairwise.kernels)
    for (double s : k.spec.sigma) CHECK(s >= 1e-3);
}

TEST_CASE("the exact backward pass beats finite differences by a wide margin") {
  // Training updates 20 scalars here (18 unary weights, 2 kernel weights)
  // with bandwidths frozen. Central differences pay two inference runs per
  // scalar; one stored-trajectory replay prices all of them exactly.
  RunConfig cfg = base_config(3, "linear");
  cfg.crf.iterations = 5;
  ModelState state = build_state(cfg);
  Manifest manifest = synth_dataset(temp_dir("dcrf_tr_speed"), 1, 32, 3, 25.0, 408);
  standardize_linear(state, manifest);
  Sample sample = load_sample(manifest.entries[0]);
  const LabelSpace labels{3};
  std::vector<ParamTensor>& params = state.provider->params();
  for (std::size_t i = 0; i < params[0].value.size(); ++i)
    params[0].value[i] = 0.05 * static_cast<double>(static_cast<int>(i % 7) - 3);

  using clock = std::chrono::steady_clock;
  auto plans = build_plans(sample.image, state.pairwise, FilterMode::brute, false);
  MfConfig mf;
  mf.iterations = 5;
  mf.filter_mode = FilterMode::brute;

  const auto t0 = clock::now();
  ScoreField scores = state.provider->forward(sample.image);
  MfTrajectory traj = mf_infer(scores, state.pairwise, plans, mf);
  GradientBundle bundle = mf_backward(traj, state.pairwise, plans, sample.labels, labels);
  state.provider->backward(bundle.d_unary);
  const double backward_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  CHECK(bundle.finite());
  REQUIRE(bundle.d_weights.size() == 2);

  const auto t1 = clock::now();
  double sink = 0.0;
  auto run_loss = [&](const PairwiseModel& model) {
    ScoreField s = state.provider->forward(sample.image);
    return loss_nll(mf_infer(s, model, plans, mf).final_q(), sample.labels, labels).value;
  };
  for (std::size_t i = 0; i < params[0].value.size(); ++i)
    for (int dir = 0; dir < 2; ++dir) {
      const double saved = params[0].value[i];
      params[0].value[i] = saved + (dir == 0 ? 1e-5 : -1e-5);
      sink += run_loss(state.pairwise);
      params[0].value[i] = saved;
    }
  for (int m = 0; m < 2; ++m)
    for (int dir = 0; dir < 2; ++dir) {
      PairwiseModel perturbed = state.pairwise;
      perturbed.kernels[m].weight += dir == 0 ? 1e-5 : -1e-5;
      sink += run_loss(perturbed);
    }
  const double fd_seconds = std::chrono::duration<double>(clock::now() - t1).count();
  CHECK(std::isfinite(sink));
  CHECK(fd_seconds > 5.0 * backward_seconds);
}
