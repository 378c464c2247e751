#ifndef DCRF_KERNEL_HPP
#define DCRF_KERNEL_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcrf/features.hpp"

namespace dcrf {

// One Gaussian kernel with a diagonal bandwidth matrix.
struct KernelSpec {
  FeatureKind kind = FeatureKind::spatial;
  std::vector<double> sigma;  // one bandwidth per feature dimension, all > 0

  void validate() const {
    if (static_cast<int>(sigma.size()) != feature_dim(kind))
      throw std::invalid_argument("KernelSpec: expected " + std::to_string(feature_dim(kind)) +
                                  " bandwidths, got " + std::to_string(sigma.size()));
    for (double s : sigma)
      if (!(s > 0.0))
        throw std::invalid_argument("KernelSpec: bandwidths must be positive");
  }
};

// exp(-1/2 * sum_d (fi_d - fj_d)^2 / sigma_d^2), in (0, 1].
double kernel_value(std::span<const double> fi, std::span<const double> fj,
                    const KernelSpec& spec);

}  // namespace dcrf

#endif
