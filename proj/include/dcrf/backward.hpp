#ifndef DCRF_BACKWARD_HPP
#define DCRF_BACKWARD_HPP

#include <span>
#include <vector>

#include "dcrf/field.hpp"
#include "dcrf/filter.hpp"
#include "dcrf/loss.hpp"
#include "dcrf/meanfield.hpp"
#include "dcrf/pairwise.hpp"

namespace dcrf {

// Loss gradients w.r.t. everything the CRF stage can learn.
struct GradientBundle {
  ScoreField d_unary;
  std::vector<double> d_weights;             // per kernel
  std::vector<std::vector<double>> d_sigma;  // per kernel, per bandwidth
  std::vector<double> d_compat;              // L x L, matrix mode only

  void accumulate(const GradientBundle& other, double scale);
  void scale_all(double scale);
  bool finite() const;
};

GradientBundle zero_bundle(const PairwiseModel& model, int height, int width, int num_labels);

// How bandwidth gradients are produced: analytically (brute plans only), by
// central finite differences re-running inference, or not at all.
enum class SigmaGradMode { brute, finite_diff, frozen };

// Walks the stored trajectory from q^T back to q^0, peeling one softmax and
// one message per step. Each step adds its pre-softmax gradient to d_unary,
// correlates it with the self-excluded responses for d_weights and d_compat,
// and pushes the remainder through the (adjoint) filters to the previous
// marginals. The final gradient at q^0 flows through the init softmax.
GradientBundle mf_backward(const MfTrajectory& traj, const PairwiseModel& model,
                           std::span<const FilterPlan> plans, const LabelMap& gt, const LabelSpace& labels,
                           SigmaGradMode sigma_mode = SigmaGradMode::frozen, LossNorm norm = LossNorm::mean);

}  // namespace dcrf

#endif
