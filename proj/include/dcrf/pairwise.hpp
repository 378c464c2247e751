#ifndef DCRF_PAIRWISE_HPP
#define DCRF_PAIRWISE_HPP

#include <span>
#include <vector>

#include "dcrf/features.hpp"
#include "dcrf/field.hpp"
#include "dcrf/filter.hpp"
#include "dcrf/kernel.hpp"

namespace dcrf {

enum class CompatMode { potts, matrix };

// Label compatibility mu(l, l'). Potts rewards agreement with 1 and scores
// disagreement 0; matrix mode carries a full L x L table, symmetric at load.
struct Compatibility {
  CompatMode mode = CompatMode::potts;
  int num_labels = 0;            // matrix mode
  std::vector<double> matrix;    // L x L row-major

  double operator()(int l, int l2) const {
    if (mode == CompatMode::potts) return l == l2 ? 1.0 : 0.0;
    return matrix[static_cast<std::size_t>(l) * num_labels + l2];
  }
  void validate() const;
};

Compatibility potts();
Compatibility compat_from_matrix(int num_labels, std::vector<double> matrix);

struct PairwiseKernel {
  KernelSpec spec;
  double weight = 1.0;
};

// Kernel mixture plus compatibility: f(l, l2, f_i, f_j) =
// mu(l, l2) * sum_m w_m k_m(f_i, f_j). Scalar paths slice each kernel's
// bandwidth count off the front of a shared feature row, so a bilateral
// feature field (x, y, r, g, b) also serves its spatial kernels.
struct PairwiseModel {
  std::vector<PairwiseKernel> kernels;
  Compatibility compat;

  int max_feature_dim() const;
  void validate(int num_labels) const;
};

double pairwise_value(int l, int l2, std::span<const double> fi, std::span<const double> fj,
                      const PairwiseModel& model);

// out_i(l) = sum_l' mu(l, l') * x_i(l'), and the transpose over the first index.
Field3 apply_compat(const Compatibility& compat, const Field3& x);
Field3 apply_compat_transpose(const Compatibility& compat, const Field3& x);

// Mean-field message: out_i(l) = sum_m w_m sum_l' mu(l, l') ([K_m q]_i(l') - q_i(l')),
// with plans[m] filtering for kernel m. The subtraction removes the j = i term
// the filters include.
ScoreField pairwise_message(const MarginalField& q, const PairwiseModel& model,
                            std::span<const FilterPlan> plans);

// E_q of the pairwise score, exact over all unordered pixel pairs. Scalar
// reference, guarded to small grids.
double expected_pairwise_score(const MarginalField& q, const PairwiseModel& model, const FeatureField& feats);

}  // namespace dcrf

#endif
