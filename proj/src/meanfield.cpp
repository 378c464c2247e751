#include "dcrf/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dcrf/softmax.hpp"

namespace dcrf {

namespace {

void check_plans(const ScoreField& unary, const PairwiseModel& model, std::span<const FilterPlan> plans) {
  if (plans.size() != model.kernels.size())
    throw std::invalid_argument("plan count does not match kernel count");
  for (const auto& plan : plans)
    if (plan.height() != unary.height || plan.width() != unary.width)
      throw std::invalid_argument("filter plan grid does not match the unary field");
}

ScoreField message_from_responses(const MarginalField& q, const PairwiseModel& model,
                                  std::span<const Field3> responses) {
  ScoreField msg(q.height, q.width, q.channels, 0.0);
  const std::size_t total = q.values.size();
  for (std::size_t m = 0; m < responses.size(); ++m) {
    Field3 g = responses[m];
    for (std::size_t i = 0; i < total; ++i) g.values[i] -= q.values[i];
    Field3 mixed = apply_compat(model.compat, g);
    const double w = model.kernels[m].weight;
    for (std::size_t i = 0; i < total; ++i) msg.values[i] += w * mixed.values[i];
  }
  return msg;
}

}  // namespace

MarginalField mf_init(const ScoreField& unary) { return softmax_normalize(unary); }

MarginalField mf_step_parallel(const MarginalField& q, const ScoreField& unary, const PairwiseModel& model,
                               std::span<const FilterPlan> plans) {
  require_same_shape(q, unary);
  check_plans(unary, model, plans);
  ScoreField combined = unary;
  ScoreField msg = pairwise_message(q, model, plans);
  for (std::size_t i = 0; i < combined.values.size(); ++i) combined.values[i] += msg.values[i];
  return softmax_normalize(combined);
}

MarginalField mf_step_sequential(const MarginalField& q, const ScoreField& unary, const PairwiseModel& model,
                                 const FeatureField& feats, std::span<const int> order) {
  require_same_shape(q, unary);
  if (feats.height != q.height || feats.width != q.width)
    throw std::invalid_argument("features and marginals cover different grids");
  const int n = q.height * q.width;
  if (n > 4096) throw std::invalid_argument("sequential sweeps are limited to 4096 pixels");
  if (static_cast<int>(order.size()) != n) throw std::invalid_argument("order must list every pixel exactly once");
  std::vector<char> seen(n, 0);
  for (int i : order) {
    if (i < 0 || i >= n || seen[i]) throw std::invalid_argument("order must list every pixel exactly once");
    seen[i] = 1;
  }
  if (feats.dim < model.max_feature_dim())
    throw std::invalid_argument("feature rows are shorter than the widest kernel");

  const int L = q.channels;
  MarginalField out = q;
  std::vector<double> msg(L);
  std::vector<double> logits(L);

  for (int i : order) {
    const auto fi = feats.pixel(i);
    std::fill(msg.begin(), msg.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto fj = feats.pixel(j);
      double mix = 0.0;
      for (const auto& k : model.kernels) {
        const std::size_t d = k.spec.sigma.size();
        mix += k.weight * kernel_value(fi.first(d), fj.first(d), k.spec);
      }
      const double* qj = out.values.data() + static_cast<std::size_t>(j) * L;
      if (model.compat.mode == CompatMode::potts) {
        for (int l = 0; l < L; ++l) msg[l] += mix * qj[l];
      } else {
        for (int l = 0; l < L; ++l) {
          double s = 0.0;
          for (int l2 = 0; l2 < L; ++l2) s += model.compat.matrix[static_cast<std::size_t>(l) * L + l2] * qj[l2];
          msg[l] += mix * s;
        }
      }
    }
    const double* ui = unary.values.data() + static_cast<std::size_t>(i) * L;
    double mx = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < L; ++l) {
      logits[l] = ui[l] + msg[l];
      mx = std::max(mx, logits[l]);
    }
    double z = 0.0;
    for (int l = 0; l < L; ++l) {
      logits[l] = std::exp(logits[l] - mx);
      z += logits[l];
    }
    double* qi = out.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) qi[l] = logits[l] / z;
  }
  return out;
}

MfTrajectory mf_infer(const ScoreField& unary, const PairwiseModel& model, std::span<const FilterPlan> plans,
                      const MfConfig& config) {
  if (config.iterations < 0) throw std::invalid_argument("iteration count must be nonnegative");
  if (config.update_mode != UpdateMode::parallel)
    throw std::invalid_argument("trajectory inference runs parallel updates; sequential sweeps are a diagnostic path");
  check_plans(unary, model, plans);
  for (const auto& plan : plans)
    if (plan.mode() != config.filter_mode)
      throw std::invalid_argument("filter plan mode does not match the inference config");

  MfTrajectory traj;
  traj.unary = unary;
  traj.q.reserve(config.iterations + 1);
  traj.filtered.reserve(config.iterations);
  traj.q.push_back(mf_init(unary));

  for (int t = 0; t < config.iterations; ++t) {
    const MarginalField& cur = traj.q.back();
    std::vector<Field3> responses;
    responses.reserve(plans.size());
    for (const auto& plan : plans) responses.push_back(plan.apply(cur));

    ScoreField combined = unary;
    ScoreField msg = message_from_responses(cur, model, responses);
    for (std::size_t i = 0; i < combined.values.size(); ++i) combined.values[i] += msg.values[i];

    traj.filtered.push_back(std::move(responses));
    traj.q.push_back(softmax_normalize(combined));
  }
  return traj;
}

double variational_objective(const MarginalField& q, const ScoreField& unary, const PairwiseModel& model,
                             const FeatureField& feats) {
  require_same_shape(q, unary);
  const int n = q.height * q.width;
  const int L = q.channels;
  double expected_unary = 0.0;
  double entropy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* qi = q.values.data() + static_cast<std::size_t>(i) * L;
    const double* ui = unary.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) {
      expected_unary += qi[l] * ui[l];
      if (qi[l] > 0.0) entropy -= qi[l] * std::log(qi[l]);
    }
  }
  const double expected_pair = expected_pairwise_score(q, model, feats);
  return -(expected_unary + expected_pair) - entropy;
}

}  // namespace dcrf
