#ifndef DCRF_LOSS_HPP
#define DCRF_LOSS_HPP

#include <string>

#include "dcrf/field.hpp"

namespace dcrf {

enum class LossNorm { mean, sum };

struct LossReport {
  double value = 0.0;
  long counted_pixels = 0;
  std::string diagnostic;  // set when a counted pixel has zero mass on its label
};

// Negative log likelihood of the ground truth under per-pixel marginals.
// Void-labeled pixels are skipped; mean mode divides by the counted pixels.
LossReport loss_nll(const MarginalField& q, const LabelMap& gt, const LabelSpace& labels,
                    LossNorm norm = LossNorm::mean);

// d loss / d q, nonzero only at counted pixels on their ground-truth label.
Field3 loss_grad_marginals(const MarginalField& q, const LabelMap& gt, const LabelSpace& labels,
                           LossNorm norm = LossNorm::mean);

// Pulls an upstream gradient through a per-pixel softmax that produced q:
// out_i(l) = q_i(l) * (g_i(l) - sum_l' g_i(l') q_i(l')).
Field3 softmax_backward(const MarginalField& q, const Field3& upstream);

}  // namespace dcrf

#endif
