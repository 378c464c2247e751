#ifndef DCRF_ENUMERATION_HPP
#define DCRF_ENUMERATION_HPP

#include <span>
#include <vector>

#include "dcrf/features.hpp"
#include "dcrf/field.hpp"
#include "dcrf/pairwise.hpp"

namespace dcrf {

// Total score of one labeling: sum_i u_i(y_i) + sum_{i<j} f(y_i, y_j, f_i, f_j).
// Scalar reference, guarded to 16 pixels.
double global_score(std::span<const int> assignment, const ScoreField& unary, const PairwiseModel& model,
                    const FeatureField& feats);

struct EnumeratedDistribution {
  double log_partition = 0.0;
  MarginalField marginals;  // exact per-pixel label marginals
};

// Exact distribution by enumerating all L^N labelings, guarded to 1e6 states.
// Accumulation is max-shifted so the partition sum stays in range.
EnumeratedDistribution enumerate_distribution(const ScoreField& unary, const PairwiseModel& model,
                                              const FeatureField& feats);

}  // namespace dcrf

#endif
