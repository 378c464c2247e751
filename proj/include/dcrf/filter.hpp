#ifndef DCRF_FILTER_HPP
#define DCRF_FILTER_HPP

#include <memory>
#include <vector>

#include "dcrf/features.hpp"
#include "dcrf/field.hpp"
#include "dcrf/kernel.hpp"
#include "dcrf/permutohedral.hpp"

namespace dcrf {

enum class FilterMode { brute, lattice };

// Precomputed state for repeated Gaussian filtering over one pixel grid:
// out_i(l) = sum_j exp(-0.5 * sum_d ((f_id - f_jd) / sigma_d)^2) * v_j(l),
// with the j = i term included at weight 1. Brute mode is exact and caches
// the dense kernel matrix for small grids; lattice mode approximates with a
// permutohedral lattice. With normalize set, responses are divided by the
// filtered all-ones field.
class FilterPlan {
 public:
  FilterPlan(const FeatureField& features, const KernelSpec& spec, FilterMode mode, bool normalize = false);

  Field3 apply(const Field3& values) const;
  // Transpose of apply as a linear map. Equal to apply when normalize is off
  // (the kernel matrix is symmetric).
  Field3 apply_adjoint(const Field3& values) const;
  // d(apply(values)) / d(sigma[dim]), elementwise. Brute, unnormalized only.
  Field3 grad_sigma(const Field3& values, int dim) const;

  FilterMode mode() const { return mode_; }
  bool normalized() const { return normalize_; }
  const KernelSpec& spec() const { return spec_; }
  const FeatureField& features() const { return features_; }
  int height() const { return features_.height; }
  int width() const { return features_.width; }
  int pixels() const { return features_.pixels(); }

 private:
  Field3 apply_raw(const Field3& values) const;
  void check_input(const Field3& values) const;
  void calibrate_lattice_gain();

  FeatureField features_;  // raw units, kept for sigma gradients and rebuilds
  KernelSpec spec_;
  FilterMode mode_;
  bool normalize_;
  std::vector<double> whitened_;  // pixels x dim, features / sigma
  std::vector<double> kernel_matrix_;  // dense cache, pixels <= kMatrixCacheLimit
  std::vector<double> norm_;           // filtered ones, only when normalize
  std::unique_ptr<PermutohedralLattice> lattice_;
  double lattice_gain_ = 1.0;  // least-squares match against exact kernel rows

  static constexpr int kMatrixCacheLimit = 2048;
};

Field3 filter_brute(const FilterPlan& plan, const Field3& values);
Field3 filter_lattice(const FilterPlan& plan, const Field3& values);
Field3 filter_grad_sigma(const FilterPlan& plan, const Field3& values, int dim);

}  // namespace dcrf

#endif
