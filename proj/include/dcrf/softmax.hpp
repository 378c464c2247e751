#ifndef DCRF_SOFTMAX_HPP
#define DCRF_SOFTMAX_HPP

#include "dcrf/field.hpp"

namespace dcrf {

// Per-pixel softmax with max subtraction. Rejects non-finite scores.
MarginalField softmax_normalize(const ScoreField& scores);

// Per-pixel argmax; ties break toward the lowest label index.
LabelMap argmax_labeling(const MarginalField& q);

}  // namespace dcrf

#endif
