#include "dcrf/pairwise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dcrf {

void Compatibility::validate() const {
  if (mode == CompatMode::potts) return;
  if (num_labels <= 0) throw std::invalid_argument("compatibility matrix needs a positive label count");
  if (matrix.size() != static_cast<std::size_t>(num_labels) * num_labels)
    throw std::invalid_argument("compatibility matrix size does not match label count");
  for (double v : matrix)
    if (!std::isfinite(v)) throw std::invalid_argument("compatibility matrix has a non-finite entry");
}

Compatibility potts() { return Compatibility{}; }

Compatibility compat_from_matrix(int num_labels, std::vector<double> matrix) {
  Compatibility c;
  c.mode = CompatMode::matrix;
  c.num_labels = num_labels;
  c.matrix = std::move(matrix);
  c.validate();
  for (int a = 0; a < num_labels; ++a)
    for (int b = a + 1; b < num_labels; ++b) {
      const double ab = c.matrix[static_cast<std::size_t>(a) * num_labels + b];
      const double ba = c.matrix[static_cast<std::size_t>(b) * num_labels + a];
      if (ab != ba)
        throw std::invalid_argument("compatibility matrix is not symmetric at (" + std::to_string(a) + ", " +
                                    std::to_string(b) + ")");
    }
  return c;
}

int PairwiseModel::max_feature_dim() const {
  int d = 0;
  for (const auto& k : kernels) d = std::max(d, static_cast<int>(k.spec.sigma.size()));
  return d;
}

void PairwiseModel::validate(int num_labels) const {
  if (kernels.empty()) throw std::invalid_argument("pairwise model needs at least one kernel");
  for (const auto& k : kernels) {
    k.spec.validate();
    if (!std::isfinite(k.weight)) throw std::invalid_argument("kernel weight is not finite");
  }
  compat.validate();
  if (compat.mode == CompatMode::matrix && compat.num_labels != num_labels)
    throw std::invalid_argument("compatibility matrix is for " + std::to_string(compat.num_labels) +
                                " labels, model uses " + std::to_string(num_labels));
}

double pairwise_value(int l, int l2, std::span<const double> fi, std::span<const double> fj,
                      const PairwiseModel& model) {
  double mix = 0.0;
  for (const auto& k : model.kernels) {
    const std::size_t d = k.spec.sigma.size();
    if (fi.size() < d || fj.size() < d)
      throw std::invalid_argument("feature row is shorter than a kernel's bandwidth count");
    mix += k.weight * kernel_value(fi.first(d), fj.first(d), k.spec);
  }
  return model.compat(l, l2) * mix;
}

Field3 apply_compat(const Compatibility& compat, const Field3& x) {
  if (compat.mode == CompatMode::potts) return x;
  const int n = x.height * x.width;
  const int L = x.channels;
  Field3 out(x.height, x.width, L);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.values.data() + static_cast<std::size_t>(i) * L;
    double* oi = out.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) {
      double s = 0.0;
      for (int l2 = 0; l2 < L; ++l2) s += compat.matrix[static_cast<std::size_t>(l) * L + l2] * xi[l2];
      oi[l] = s;
    }
  }
  return out;
}

Field3 apply_compat_transpose(const Compatibility& compat, const Field3& x) {
  if (compat.mode == CompatMode::potts) return x;
  const int n = x.height * x.width;
  const int L = x.channels;
  Field3 out(x.height, x.width, L);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.values.data() + static_cast<std::size_t>(i) * L;
    double* oi = out.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) {
      double s = 0.0;
      for (int l2 = 0; l2 < L; ++l2) s += compat.matrix[static_cast<std::size_t>(l2) * L + l] * xi[l2];
      oi[l] = s;
    }
  }
  return out;
}

ScoreField pairwise_message(const MarginalField& q, const PairwiseModel& model,
                            std::span<const FilterPlan> plans) {
  if (plans.size() != model.kernels.size())
    throw std::invalid_argument("plan count does not match kernel count");
  ScoreField msg(q.height, q.width, q.channels, 0.0);
  const std::size_t total = q.values.size();
  for (std::size_t m = 0; m < plans.size(); ++m) {
    Field3 g = plans[m].apply(q);
    for (std::size_t i = 0; i < total; ++i) g.values[i] -= q.values[i];
    Field3 mixed = apply_compat(model.compat, g);
    const double w = model.kernels[m].weight;
    for (std::size_t i = 0; i < total; ++i) msg.values[i] += w * mixed.values[i];
  }
  return msg;
}

double expected_pairwise_score(const MarginalField& q, const PairwiseModel& model, const FeatureField& feats) {
  if (q.height != feats.height || q.width != feats.width)
    throw std::invalid_argument("marginals and features cover different grids");
  const int n = q.height * q.width;
  if (n > 4096) throw std::invalid_argument("exact pairwise expectation is limited to 4096 pixels");
  const int L = q.channels;
  if (feats.dim < model.max_feature_dim())
    throw std::invalid_argument("feature rows are shorter than the widest kernel");

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto fi = feats.pixel(i);
    const double* qi = q.values.data() + static_cast<std::size_t>(i) * L;
    for (int j = i + 1; j < n; ++j) {
      const auto fj = feats.pixel(j);
      double mix = 0.0;
      for (const auto& k : model.kernels) {
        const std::size_t d = k.spec.sigma.size();
        mix += k.weight * kernel_value(fi.first(d), fj.first(d), k.spec);
      }
      const double* qj = q.values.data() + static_cast<std::size_t>(j) * L;
      double pair = 0.0;
      if (model.compat.mode == CompatMode::potts) {
        for (int l = 0; l < L; ++l) pair += qi[l] * qj[l];
      } else {
        for (int l = 0; l < L; ++l)
          for (int l2 = 0; l2 < L; ++l2)
            pair += qi[l] * model.compat.matrix[static_cast<std::size_t>(l) * L + l2] * qj[l2];
      }
      total += mix * pair;
    }
  }
  return total;
}

}  // namespace dcrf
