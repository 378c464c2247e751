#include "dcrf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dcrf/parallel.hpp"
#include "dcrf/rng.hpp"

namespace dcrf {

FilterPlan::FilterPlan(const FeatureField& features, const KernelSpec& spec, FilterMode mode, bool normalize)
    : features_(features), spec_(spec), mode_(mode), normalize_(normalize) {
  spec_.validate();
  if (features_.dim != static_cast<int>(spec_.sigma.size()))
    throw std::invalid_argument("feature dim " + std::to_string(features_.dim) + " does not match bandwidth count " +
                                std::to_string(spec_.sigma.size()));
  const int n = features_.pixels();
  const int d = features_.dim;
  whitened_.resize(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      whitened_[static_cast<std::size_t>(i) * d + k] = features_.values[static_cast<std::size_t>(i) * d + k] / spec_.sigma[k];

  if (mode_ == FilterMode::lattice) {
    lattice_ = std::make_unique<PermutohedralLattice>(whitened_.data(), n, d);
    calibrate_lattice_gain();
  } else if (n <= kMatrixCacheLimit) {
    kernel_matrix_.resize(static_cast<std::size_t>(n) * n);
    parallel_for(n, 16, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const double* fi = whitened_.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
          const double* fj = whitened_.data() + static_cast<std::size_t>(j) * d;
          double e = 0.0;
          for (int k = 0; k < d; ++k) {
            const double diff = fi[k] - fj[k];
            e += diff * diff;
          }
          kernel_matrix_[static_cast<std::size_t>(i) * n + j] = std::exp(-0.5 * e);
        }
      }
    });
  }

  if (normalize_) {
    Field3 ones(features_.height, features_.width, 1, 1.0);
    Field3 filtered = apply_raw(ones);
    norm_ = std::move(filtered.values);
    for (double v : norm_)
      if (!(v > 0.0)) throw std::invalid_argument("filter normalizer is not positive");
  }
}

// The lattice response scale wanders a few percent with the geometry of the
// feature cloud. A least-squares match of lattice responses against exact
// kernel rows at a deterministic pixel sample pins the scale per plan.
void FilterPlan::calibrate_lattice_gain() {
  const int n = features_.pixels();
  const int d = features_.dim;
  std::vector<double> probe(n), response(n);
  Rng rng(0x9e3779b97f4a7c15ULL);
  for (auto& v : probe) v = rng.uniform();
  lattice_->filter(probe.data(), response.data(), 1);

  const int samples = std::min(n, 256);
  std::vector<double> exact(samples);
  parallel_for(samples, 1, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s) {
      const int i = static_cast<int>(s * n / samples);
      const double* fi = whitened_.data() + static_cast<std::size_t>(i) * d;
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        const double* fj = whitened_.data() + static_cast<std::size_t>(j) * d;
        double e = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = fi[k] - fj[k];
          e += diff * diff;
        }
        row += std::exp(-0.5 * e) * probe[j];
      }
      exact[s] = row;
    }
  });
  double num = 0.0, den = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int i = static_cast<int>(static_cast<std::int64_t>(s) * n / samples);
    num += exact[s] * response[i];
    den += response[i] * response[i];
  }
  if (den > 0.0) lattice_gain_ = num / den;
}

void FilterPlan::check_input(const Field3& values) const {
  if (values.height != features_.height || values.width != features_.width)
    throw std::invalid_argument("value field is " + std::to_string(values.height) + "x" + std::to_string(values.width) +
                                " but the plan grid is " + std::to_string(features_.height) + "x" +
                                std::to_string(features_.width));
}

Field3 FilterPlan::apply_raw(const Field3& values) const {
  check_input(values);
  const int n = features_.pixels();
  const int d = features_.dim;
  const int vs = values.channels;
  Field3 out(values.height, values.width, vs);

  if (mode_ == FilterMode::lattice) {
    lattice_->filter(values.values.data(), out.values.data(), vs);
    for (double& v : out.values) v *= lattice_gain_;
    return out;
  }
  if (!kernel_matrix_.empty()) {
    parallel_for(n, 8, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const double* row = kernel_matrix_.data() + static_cast<std::size_t>(i) * n;
        double* o = out.values.data() + static_cast<std::size_t>(i) * vs;
        for (int j = 0; j < n; ++j) {
          const double k = row[j];
          const double* v = values.values.data() + static_cast<std::size_t>(j) * vs;
          for (int c = 0; c < vs; ++c) o[c] += k * v[c];
        }
      }
    });
    return out;
  }
  parallel_for(n, 4, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const double* fi = whitened_.data() + static_cast<std::size_t>(i) * d;
      double* o = out.values.data() + static_cast<std::size_t>(i) * vs;
      for (int j = 0; j < n; ++j) {
        const double* fj = whitened_.data() + static_cast<std::size_t>(j) * d;
        double e = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = fi[k] - fj[k];
          e += diff * diff;
        }
        const double k = std::exp(-0.5 * e);
        const double* v = values.values.data() + static_cast<std::size_t>(j) * vs;
        for (int c = 0; c < vs; ++c) o[c] += k * v[c];
      }
    }
  });
  return out;
}

Field3 FilterPlan::apply(const Field3& values) const {
  Field3 out = apply_raw(values);
  if (normalize_) {
    const int n = features_.pixels();
    const int vs = out.channels;
    for (int i = 0; i < n; ++i) {
      const double inv = 1.0 / norm_[i];
      double* o = out.values.data() + static_cast<std::size_t>(i) * vs;
      for (int c = 0; c < vs; ++c) o[c] *= inv;
    }
  }
  return out;
}

Field3 FilterPlan::apply_adjoint(const Field3& values) const {
  if (!normalize_) return apply_raw(values);
  // Forward is diag(1/norm) * K, so the transpose scales first, then filters.
  check_input(values);
  Field3 scaled = values;
  const int n = features_.pixels();
  const int vs = values.channels;
  for (int i = 0; i < n; ++i) {
    const double inv = 1.0 / norm_[i];
    double* o = scaled.values.data() + static_cast<std::size_t>(i) * vs;
    for (int c = 0; c < vs; ++c) o[c] *= inv;
  }
  return apply_raw(scaled);
}

Field3 FilterPlan::grad_sigma(const Field3& values, int dim) const {
  if (mode_ != FilterMode::brute)
    throw std::invalid_argument("bandwidth gradients need a brute filter plan");
  if (normalize_)
    throw std::invalid_argument("bandwidth gradients are not defined for normalized plans");
  if (dim < 0 || dim >= features_.dim) throw std::invalid_argument("bandwidth index out of range");
  check_input(values);
  const int n = features_.pixels();
  const int d = features_.dim;
  const int vs = values.channels;
  const double inv_sigma = 1.0 / spec_.sigma[dim];
  Field3 out(values.height, values.width, vs);

  // dk/dsigma_d = k * (f_id - f_jd)^2 / sigma_d^3; in whitened units the
  // squared difference already carries 1/sigma_d^2.
  parallel_for(n, 4, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const double* fi = whitened_.data() + static_cast<std::size_t>(i) * d;
      double* o = out.values.data() + static_cast<std::size_t>(i) * vs;
      for (int j = 0; j < n; ++j) {
        const double* fj = whitened_.data() + static_cast<std::size_t>(j) * d;
        double e = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = fi[k] - fj[k];
          e += diff * diff;
        }
        const double dd = fi[dim] - fj[dim];
        const double g = std::exp(-0.5 * e) * dd * dd * inv_sigma;
        const double* v = values.values.data() + static_cast<std::size_t>(j) * vs;
        for (int c = 0; c < vs; ++c) o[c] += g * v[c];
      }
    }
  });
  return out;
}

Field3 filter_brute(const FilterPlan& plan, const Field3& values) {
  if (plan.mode() != FilterMode::brute) throw std::invalid_argument("plan was not built in brute mode");
  return plan.apply(values);
}

Field3 filter_lattice(const FilterPlan& plan, const Field3& values) {
  if (plan.mode() != FilterMode::lattice) throw std::invalid_argument("plan was not built in lattice mode");
  return plan.apply(values);
}

Field3 filter_grad_sigma(const FilterPlan& plan, const Field3& values, int dim) {
  return plan.grad_sigma(values, dim);
}

}  // namespace dcrf
