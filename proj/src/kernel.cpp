#include "dcrf/kernel.hpp"

#include <cmath>

namespace dcrf {

double kernel_value(std::span<const double> fi, std::span<const double> fj,
                    const KernelSpec& spec) {
  spec.validate();
  if (fi.size() != fj.size() || fi.size() != spec.sigma.size())
    throw std::invalid_argument("kernel_value: feature dimensions disagree");
  double e = 0.0;
  for (std::size_t d = 0; d < fi.size(); ++d) {
    const double z = (fi[d] - fj[d]) / spec.sigma[d];
    e += z * z;
  }
  return std::exp(-0.5 * e);
}

}  // namespace dcrf
