#ifndef DCRF_MEANFIELD_HPP
#define DCRF_MEANFIELD_HPP

#include <span>
#include <vector>

#include "dcrf/features.hpp"
#include "dcrf/field.hpp"
#include "dcrf/filter.hpp"
#include "dcrf/pairwise.hpp"

namespace dcrf {

enum class UpdateMode { parallel, sequential };

struct MfConfig {
  int iterations = 5;
  UpdateMode update_mode = UpdateMode::parallel;
  FilterMode filter_mode = FilterMode::lattice;
};

// Everything the backward pass replays: the unary, marginals q^0..q^T, and
// for each step the per-kernel filter responses consumed when producing q^t.
struct MfTrajectory {
  ScoreField unary;
  std::vector<MarginalField> q;
  std::vector<std::vector<Field3>> filtered;  // [t][m] = K_m q^t, feeding q^{t+1}

  int iterations() const { return static_cast<int>(q.size()) - 1; }
  const MarginalField& final_q() const { return q.back(); }
};

MarginalField mf_init(const ScoreField& unary);

MarginalField mf_step_parallel(const MarginalField& q, const ScoreField& unary, const PairwiseModel& model,
                               std::span<const FilterPlan> plans);

// One full sweep updating pixels in the given order, each update reading the
// freshest marginals. Scalar kernel sums, guarded to 4096 pixels.
MarginalField mf_step_sequential(const MarginalField& q, const ScoreField& unary, const PairwiseModel& model,
                                 const FeatureField& feats, std::span<const int> order);

MfTrajectory mf_infer(const ScoreField& unary, const PairwiseModel& model, std::span<const FilterPlan> plans,
                      const MfConfig& config);

// KL(q || p) up to the constant log partition: -E_q[score] minus the entropy
// of q. Exact pairwise expectation, so small grids only.
double variational_objective(const MarginalField& q, const ScoreField& unary, const PairwiseModel& model,
                             const FeatureField& feats);

}  // namespace dcrf

#endif
