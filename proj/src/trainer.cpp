#include "dcrf/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "dcrf/backward.hpp"
#include "dcrf/errors.hpp"
#include "dcrf/features.hpp"
#include "dcrf/loss.hpp"
#include "dcrf/meanfield.hpp"
#include "dcrf/metrics.hpp"
#include "dcrf/softmax.hpp"

namespace dcrf {

namespace {

OptimSettings optim_settings(const RunConfig& config) {
  OptimSettings s;
  s.momentum = config.optimizer.momentum;
  s.weight_decay = config.optimizer.weight_decay;
  s.learning_rate = {{"top", config.optimizer.lr_top},
                     {"body", config.optimizer.lr_body},
                     {"crf", config.optimizer.lr_crf}};
  return s;
}

constexpr double kSigmaFloor = 1e-3;

void symmetrize_compat(PairwiseModel& model) {
  if (model.compat.mode != CompatMode::matrix) return;
  const int L = model.compat.num_labels;
  for (int a = 0; a < L; ++a)
    for (int b = a + 1; b < L; ++b) {
      const std::size_t ab = static_cast<std::size_t>(a) * L + b;
      const std::size_t ba = static_cast<std::size_t>(b) * L + a;
      const double avg = 0.5 * (model.compat.matrix[ab] + model.compat.matrix[ba]);
      model.compat.matrix[ab] = avg;
      model.compat.matrix[ba] = avg;
    }
}

}  // namespace

ModelState build_state(const RunConfig& config) {
  config.validate();
  return ModelState(config, make_unary(config.unary, config.labels, config.training.seed),
                    config.make_pairwise(), SgdOptimizer(optim_settings(config)));
}

void standardize_linear(ModelState& state, const Manifest& train) {
  auto* linear = dynamic_cast<LinearUnary*>(state.provider.get());
  if (!linear) return;
  std::vector<double> sum(LinearUnary::kFeatureDim, 0.0), sum_sq(LinearUnary::kFeatureDim, 0.0);
  long count = 0;
  for (const auto& entry : train.entries) {
    Sample s = load_sample(entry);
    FeatureField f = build_features(s.image, FeatureKind::bilateral);
    for (int i = 0; i < f.pixels(); ++i) {
      const auto row = f.pixel(i);
      for (int d = 0; d < LinearUnary::kFeatureDim; ++d) {
        sum[d] += row[d];
        sum_sq[d] += row[d] * row[d];
      }
    }
    count += f.pixels();
  }
  std::vector<double> mean(LinearUnary::kFeatureDim), stdev(LinearUnary::kFeatureDim);
  for (int d = 0; d < LinearUnary::kFeatureDim; ++d) {
    mean[d] = sum[d] / count;
    const double var = sum_sq[d] / count - mean[d] * mean[d];
    stdev[d] = std::sqrt(std::max(var, 1e-12));
  }
  linear->set_standardization(mean, stdev);
}

Checkpoint state_to_checkpoint(const ModelState& state) {
  Checkpoint ckpt;
  ckpt.config_json = dump_run_config(state.config);
  for (const auto& p : state.provider->params()) ckpt.set("unary." + p.name, p.value);
  if (auto* linear = dynamic_cast<const LinearUnary*>(state.provider.get())) {
    ckpt.set("unary.feat_mean", linear->feature_mean());
    ckpt.set("unary.feat_std", linear->feature_std());
  }
  std::vector<double> weights;
  for (const auto& k : state.pairwise.kernels) weights.push_back(k.weight);
  ckpt.set("crf.weights", weights);
  for (std::size_t m = 0; m < state.pairwise.kernels.size(); ++m)
    ckpt.set("crf.sigma." + std::to_string(m), state.pairwise.kernels[m].spec.sigma);
  if (state.pairwise.compat.mode == CompatMode::matrix) ckpt.set("crf.compat", state.pairwise.compat.matrix);
  for (const auto& [name, velocity] : state.optimizer.velocities()) ckpt.set("velocity." + name, velocity);
  ckpt.set("counters", {static_cast<double>(state.epoch), static_cast<double>(state.step), state.best_miou});
  return ckpt;
}

ModelState resume_state(const RunConfig& config, const Checkpoint& ckpt) {
  ModelState state = build_state(config);
  for (auto& p : state.provider->params()) {
    const auto& stored = ckpt.require("unary." + p.name);
    if (stored.size() != p.value.size())
      throw DataError("checkpoint array 'unary." + p.name + "' does not match the configured model");
    p.value = stored;
  }
  if (auto* linear = dynamic_cast<LinearUnary*>(state.provider.get()))
    linear->set_standardization(ckpt.require("unary.feat_mean"), ckpt.require("unary.feat_std"));
  const auto& weights = ckpt.require("crf.weights");
  if (weights.size() != state.pairwise.kernels.size())
    throw DataError("checkpoint kernel count does not match the configured model");
  for (std::size_t m = 0; m < weights.size(); ++m) state.pairwise.kernels[m].weight = weights[m];
  for (std::size_t m = 0; m < state.pairwise.kernels.size(); ++m) {
    const auto& sigma = ckpt.require("crf.sigma." + std::to_string(m));
    if (sigma.size() != state.pairwise.kernels[m].spec.sigma.size())
      throw DataError("checkpoint bandwidths do not match kernel " + std::to_string(m));
    state.pairwise.kernels[m].spec.sigma = sigma;
  }
  if (state.pairwise.compat.mode == CompatMode::matrix) {
    const auto& compat = ckpt.require("crf.compat");
    if (compat.size() != state.pairwise.compat.matrix.size())
      throw DataError("checkpoint compatibility matrix does not match the label count");
    state.pairwise.compat.matrix = compat;
  }
  for (const auto& [name, values] : ckpt.arrays)
    if (name.rfind("velocity.", 0) == 0) state.optimizer.velocities()[name.substr(9)] = values;
  const auto& counters = ckpt.require("counters");
  if (counters.size() != 3) throw DataError("checkpoint counters are malformed");
  state.epoch = static_cast<long>(counters[0]);
  state.step = static_cast<long>(counters[1]);
  state.best_miou = counters[2];
  return state;
}

ModelState state_from_checkpoint(const Checkpoint& ckpt) {
  return resume_state(parse_run_config(ckpt.config_json, "checkpoint config"), ckpt);
}

std::vector<FilterPlan> build_plans(const ImageU8& image, const PairwiseModel& model, FilterMode mode,
                                    bool normalize) {
  std::vector<FilterPlan> plans;
  plans.reserve(model.kernels.size());
  for (const auto& k : model.kernels)
    plans.emplace_back(build_features(image, k.spec.kind), k.spec, mode, normalize);
  return plans;
}

MarginalField predict_marginals(ModelState& state, const ImageU8& image, bool crf_active) {
  ScoreField scores = state.provider->forward(image);
  if (!crf_active) return softmax_normalize(scores);
  auto plans = build_plans(image, state.pairwise, state.config.crf.filter_mode, state.config.crf.normalize_filter);
  MfConfig mf;
  mf.iterations = state.config.crf.iterations;
  mf.filter_mode = state.config.crf.filter_mode;
  return mf_infer(scores, state.pairwise, plans, mf).final_q();
}

StepOutcome train_step(std::span<const Sample> batch, ModelState& state, bool crf_active) {
  if (batch.empty()) throw std::invalid_argument("training batch is empty");
  const LabelSpace labels{state.config.labels};
  const LossNorm norm = state.config.loss;
  StepOutcome outcome;

  state.provider->zero_grad();
  GradientBundle crf_grads = zero_bundle(state.pairwise, 1, 1, state.config.labels);

  for (const Sample& sample : batch) {
    ScoreField scores = state.provider->forward(sample.image);
    if (crf_active) {
      auto plans =
          build_plans(sample.image, state.pairwise, state.config.crf.filter_mode, state.config.crf.normalize_filter);
      MfConfig mf;
      mf.iterations = state.config.crf.iterations;
      mf.filter_mode = state.config.crf.filter_mode;
      MfTrajectory traj = mf_infer(scores, state.pairwise, plans, mf);
      LossReport loss = loss_nll(traj.final_q(), sample.labels, labels, norm);
      outcome.loss += loss.value;
      outcome.counted_pixels += loss.counted_pixels;
      GradientBundle bundle =
          mf_backward(traj, state.pairwise, plans, sample.labels, labels, state.config.crf.sigma_grad, norm);
      state.provider->backward(bundle.d_unary);
      for (std::size_t m = 0; m < crf_grads.d_weights.size(); ++m) crf_grads.d_weights[m] += bundle.d_weights[m];
      for (std::size_t m = 0; m < crf_grads.d_sigma.size(); ++m)
        for (std::size_t d = 0; d < crf_grads.d_sigma[m].size(); ++d)
          crf_grads.d_sigma[m][d] += bundle.d_sigma[m][d];
      for (std::size_t i = 0; i < crf_grads.d_compat.size(); ++i) crf_grads.d_compat[i] += bundle.d_compat[i];
    } else {
      MarginalField q = softmax_normalize(scores);
      LossReport loss = loss_nll(q, sample.labels, labels, norm);
      outcome.loss += loss.value;
      outcome.counted_pixels += loss.counted_pixels;
      Field3 d_scores = softmax_backward(q, loss_grad_marginals(q, sample.labels, labels, norm));
      state.provider->backward(d_scores);
    }
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  outcome.loss *= inv_batch;
  for (auto& p : state.provider->params())
    for (double& g : p.grad) g *= inv_batch;
  crf_grads.scale_all(inv_batch);

  bool finite = std::isfinite(outcome.loss) && crf_grads.finite();
  for (const auto& p : state.provider->params())
    for (double g : p.grad)
      if (!std::isfinite(g)) finite = false;
  if (!finite) {
    outcome.applied = false;
    outcome.note = "non-finite gradient; update skipped";
    ++state.step;
    return outcome;
  }

  std::vector<ParamUpdate> updates;
  for (auto& p : state.provider->params())
    updates.push_back({"unary." + p.name, p.group, p.value, p.grad, true, -1e300});

  std::vector<double> weights;
  if (crf_active) {
    const bool decay_crf = state.config.optimizer.weight_decay_crf;
    for (const auto& k : state.pairwise.kernels) weights.push_back(k.weight);
    updates.push_back({"crf.weights", "crf", weights, crf_grads.d_weights, decay_crf, -1e300});
    for (std::size_t m = 0; m < state.pairwise.kernels.size(); ++m)
      updates.push_back({"crf.sigma." + std::to_string(m), "crf", state.pairwise.kernels[m].spec.sigma,
                         crf_grads.d_sigma[m], decay_crf, kSigmaFloor});
    if (state.pairwise.compat.mode == CompatMode::matrix)
      updates.push_back({"crf.compat", "crf", state.pairwise.compat.matrix, crf_grads.d_compat, decay_crf, -1e300});
  }

  state.optimizer.step(updates);
  if (crf_active) {
    for (std::size_t m = 0; m < weights.size(); ++m) state.pairwise.kernels[m].weight = weights[m];
    symmetrize_compat(state.pairwise);
  }
  ++state.step;
  return outcome;
}

EvalOutcome evaluate(const Manifest& manifest, ModelState& state, bool crf_active) {
  const LabelSpace labels{state.config.labels};
  ConfusionMatrix cm(state.config.labels);
  EvalOutcome out;
  for (const auto& entry : manifest.entries) {
    Sample sample = load_sample(entry);
    MarginalField q = predict_marginals(state, sample.image, crf_active);
    out.mean_loss += loss_nll(q, sample.labels, labels, state.config.loss).value;
    cm.accumulate(sample.labels, argmax_labeling(q), labels);
  }
  out.mean_loss /= static_cast<double>(manifest.entries.size());
  out.miou = mean_iou(cm);
  return out;
}

}  // namespace dcrf
