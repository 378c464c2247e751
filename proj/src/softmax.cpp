#include "dcrf/softmax.hpp"

#include <cmath>

#include "dcrf/parallel.hpp"

namespace dcrf {

MarginalField softmax_normalize(const ScoreField& scores) {
  require_finite(scores, "softmax_normalize");
  MarginalField q(scores.height, scores.width, scores.channels);
  const int L = scores.channels;
  parallel_for(scores.pixels(), 4096, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      auto in = scores.pixel(static_cast<int>(i));
      auto out = q.pixel(static_cast<int>(i));
      double best = in[0];
      for (int l = 1; l < L; ++l) best = std::max(best, in[l]);
      double sum = 0.0;
      for (int l = 0; l < L; ++l) {
        out[l] = std::exp(in[l] - best);
        sum += out[l];
      }
      const double inv = 1.0 / sum;
      for (int l = 0; l < L; ++l) out[l] *= inv;
    }
  });
  return q;
}

LabelMap argmax_labeling(const MarginalField& q) {
  LabelMap map(q.height, q.width);
  const int L = q.channels;
  parallel_for(q.pixels(), 8192, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      auto row = q.pixel(static_cast<int>(i));
      int best = 0;
      for (int l = 1; l < L; ++l)
        if (row[l] > row[best]) best = l;
      map.labels[i] = best;
    }
  });
  return map;
}

}  // namespace dcrf
