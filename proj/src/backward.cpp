#include "dcrf/backward.hpp"

#include <cmath>
#include <stdexcept>

namespace dcrf {

void GradientBundle::accumulate(const GradientBundle& other, double scale) {
  for (std::size_t i = 0; i < d_unary.values.size(); ++i) d_unary.values[i] += scale * other.d_unary.values[i];
  for (std::size_t m = 0; m < d_weights.size(); ++m) d_weights[m] += scale * other.d_weights[m];
  for (std::size_t m = 0; m < d_sigma.size(); ++m)
    for (std::size_t k = 0; k < d_sigma[m].size(); ++k) d_sigma[m][k] += scale * other.d_sigma[m][k];
  for (std::size_t i = 0; i < d_compat.size(); ++i) d_compat[i] += scale * other.d_compat[i];
}

void GradientBundle::scale_all(double scale) {
  for (double& v : d_unary.values) v *= scale;
  for (double& v : d_weights) v *= scale;
  for (auto& s : d_sigma)
    for (double& v : s) v *= scale;
  for (double& v : d_compat) v *= scale;
}

bool GradientBundle::finite() const {
  for (double v : d_unary.values)
    if (!std::isfinite(v)) return false;
  for (double v : d_weights)
    if (!std::isfinite(v)) return false;
  for (const auto& s : d_sigma)
    for (double v : s)
      if (!std::isfinite(v)) return false;
  for (double v : d_compat)
    if (!std::isfinite(v)) return false;
  return true;
}

GradientBundle zero_bundle(const PairwiseModel& model, int height, int width, int num_labels) {
  GradientBundle b;
  b.d_unary = ScoreField(height, width, num_labels, 0.0);
  b.d_weights.assign(model.kernels.size(), 0.0);
  b.d_sigma.resize(model.kernels.size());
  for (std::size_t m = 0; m < model.kernels.size(); ++m) b.d_sigma[m].assign(model.kernels[m].spec.sigma.size(), 0.0);
  if (model.compat.mode == CompatMode::matrix)
    b.d_compat.assign(static_cast<std::size_t>(num_labels) * num_labels, 0.0);
  return b;
}

namespace {

double dot_fields(const Field3& a, const Field3& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

void check_trajectory(const MfTrajectory& traj, const PairwiseModel& model, std::span<const FilterPlan> plans) {
  if (traj.q.empty()) throw std::invalid_argument("trajectory holds no marginals");
  if (traj.filtered.size() + 1 != traj.q.size())
    throw std::invalid_argument("trajectory filtered responses do not line up with its marginals");
  if (plans.size() != model.kernels.size())
    throw std::invalid_argument("plan count does not match kernel count");
  for (const auto& q : traj.q) require_same_shape(q, traj.unary);
  for (const auto& step : traj.filtered) {
    if (step.size() != model.kernels.size())
      throw std::invalid_argument("a trajectory step holds the wrong number of filter responses");
    for (const auto& g : step) require_same_shape(g, traj.unary);
  }
  for (const auto& plan : plans)
    if (plan.height() != traj.unary.height || plan.width() != traj.unary.width)
      throw std::invalid_argument("filter plan grid does not match the trajectory");
}

// Re-runs inference with one bandwidth nudged, for the finite-difference
// sigma path. Plans are rebuilt from their stored features.
double loss_with_sigma(const MfTrajectory& traj, const PairwiseModel& model, std::span<const FilterPlan> plans,
                       const LabelMap& gt, const LabelSpace& labels, LossNorm norm, std::size_t kernel,
                       std::size_t dim, double sigma_value) {
  PairwiseModel nudged = model;
  nudged.kernels[kernel].spec.sigma[dim] = sigma_value;
  std::vector<FilterPlan> rebuilt;
  rebuilt.reserve(plans.size());
  for (std::size_t m = 0; m < plans.size(); ++m)
    rebuilt.emplace_back(plans[m].features(), nudged.kernels[m].spec, plans[m].mode(), plans[m].normalized());
  MfConfig cfg;
  cfg.iterations = traj.iterations();
  cfg.filter_mode = plans.empty() ? FilterMode::lattice : plans[0].mode();
  MfTrajectory redo = mf_infer(traj.unary, nudged, rebuilt, cfg);
  return loss_nll(redo.final_q(), gt, labels, norm).value;
}

}  // namespace

GradientBundle mf_backward(const MfTrajectory& traj, const PairwiseModel& model,
                           std::span<const FilterPlan> plans, const LabelMap& gt, const LabelSpace& labels,
                           SigmaGradMode sigma_mode, LossNorm norm) {
  check_trajectory(traj, model, plans);
  const int L = traj.unary.channels;
  model.validate(L);
  if (sigma_mode == SigmaGradMode::brute)
    for (const auto& plan : plans)
      if (plan.mode() != FilterMode::brute || plan.normalized())
        throw std::invalid_argument(
            "analytic bandwidth gradients need unnormalized brute plans; use finite differences or freeze them");

  const int M = static_cast<int>(model.kernels.size());
  const int T = traj.iterations();
  GradientBundle out = zero_bundle(model, traj.unary.height, traj.unary.width, L);

  Field3 delta_q = loss_grad_marginals(traj.q[T], gt, labels, norm);

  for (int t = T; t >= 1; --t) {
    const MarginalField& q_prev = traj.q[t - 1];
    const auto& responses = traj.filtered[t - 1];

    Field3 delta_s = softmax_backward(traj.q[t], delta_q);
    for (std::size_t i = 0; i < out.d_unary.values.size(); ++i) out.d_unary.values[i] += delta_s.values[i];

    // Self-excluded responses reused by the weight, compatibility, and
    // message-gradient terms.
    std::vector<Field3> excess;
    excess.reserve(M);
    for (int m = 0; m < M; ++m) {
      Field3 g = responses[m];
      for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] -= q_prev.values[i];
      excess.push_back(std::move(g));
    }

    for (int m = 0; m < M; ++m) out.d_weights[m] += dot_fields(delta_s, apply_compat(model.compat, excess[m]));

    if (model.compat.mode == CompatMode::matrix) {
      Field3 mixture(traj.unary.height, traj.unary.width, L, 0.0);
      for (int m = 0; m < M; ++m) {
        const double w = model.kernels[m].weight;
        for (std::size_t i = 0; i < mixture.values.size(); ++i) mixture.values[i] += w * excess[m].values[i];
      }
      const int n = traj.unary.height * traj.unary.width;
      for (int i = 0; i < n; ++i) {
        const double* ds = delta_s.values.data() + static_cast<std::size_t>(i) * L;
        const double* mx = mixture.values.data() + static_cast<std::size_t>(i) * L;
        for (int a = 0; a < L; ++a)
          for (int b = 0; b < L; ++b) out.d_compat[static_cast<std::size_t>(a) * L + b] += ds[a] * mx[b];
      }
    }

    Field3 h = apply_compat_transpose(model.compat, delta_s);

    if (sigma_mode == SigmaGradMode::brute)
      for (int m = 0; m < M; ++m) {
        const double w = model.kernels[m].weight;
        for (std::size_t dim = 0; dim < model.kernels[m].spec.sigma.size(); ++dim)
          out.d_sigma[m][dim] += w * dot_fields(h, plans[m].grad_sigma(q_prev, static_cast<int>(dim)));
      }

    Field3 next(traj.unary.height, traj.unary.width, L, 0.0);
    for (int m = 0; m < M; ++m) {
      Field3 kh = plans[m].apply_adjoint(h);
      const double w = model.kernels[m].weight;
      for (std::size_t i = 0; i < next.values.size(); ++i) next.values[i] += w * (kh.values[i] - h.values[i]);
    }
    delta_q = std::move(next);
  }

  Field3 delta_s0 = softmax_backward(traj.q[0], delta_q);
  for (std::size_t i = 0; i < out.d_unary.values.size(); ++i) out.d_unary.values[i] += delta_s0.values[i];

  if (sigma_mode == SigmaGradMode::finite_diff)
    for (int m = 0; m < M; ++m)
      for (std::size_t dim = 0; dim < model.kernels[m].spec.sigma.size(); ++dim) {
        const double s0 = model.kernels[m].spec.sigma[dim];
        const double h_step = 1e-5 * std::max(1.0, std::abs(s0));
        const double up = loss_with_sigma(traj, model, plans, gt, labels, norm, m, dim, s0 + h_step);
        const double down = loss_with_sigma(traj, model, plans, gt, labels, norm, m, dim, s0 - h_step);
        out.d_sigma[m][dim] = (up - down) / (2.0 * h_step);
      }

  return out;
}

}  // namespace dcrf
