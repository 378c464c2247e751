#include "dcrf/loss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dcrf {

namespace {

void check_pair(const MarginalField& q, const LabelMap& gt, const LabelSpace& labels) {
  if (q.height != gt.height || q.width != gt.width)
    throw std::invalid_argument("marginals and labels cover different grids");
  labels.validate();
  if (q.channels != labels.num_labels)
    throw std::invalid_argument("marginal channels do not match the label count");
  for (int v : gt.labels)
    if (v != labels.void_label && (v < 0 || v >= labels.num_labels))
      throw std::invalid_argument("label map holds value " + std::to_string(v) + " outside the label set");
}

}  // namespace

LossReport loss_nll(const MarginalField& q, const LabelMap& gt, const LabelSpace& labels, LossNorm norm) {
  check_pair(q, gt, labels);
  const int n = q.height * q.width;
  const int L = q.channels;
  LossReport report;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int y = gt.labels[i];
    if (y == labels.void_label) continue;
    ++report.counted_pixels;
    const double p = q.values[static_cast<std::size_t>(i) * L + y];
    if (p == 0.0) {
      report.value = std::numeric_limits<double>::infinity();
      report.diagnostic = "pixel (" + std::to_string(i % q.width) + ", " + std::to_string(i / q.width) +
                          ") puts zero mass on its label";
      return report;
    }
    total -= std::log(p);
  }
  if (norm == LossNorm::mean && report.counted_pixels > 0) total /= report.counted_pixels;
  report.value = total;
  return report;
}

Field3 loss_grad_marginals(const MarginalField& q, const LabelMap& gt, const LabelSpace& labels, LossNorm norm) {
  check_pair(q, gt, labels);
  const int n = q.height * q.width;
  const int L = q.channels;
  long counted = 0;
  for (int i = 0; i < n; ++i)
    if (gt.labels[i] != labels.void_label) ++counted;
  Field3 grad(q.height, q.width, L, 0.0);
  if (counted == 0) return grad;
  const double scale = norm == LossNorm::mean ? 1.0 / counted : 1.0;
  for (int i = 0; i < n; ++i) {
    const int y = gt.labels[i];
    if (y == labels.void_label) continue;
    grad.values[static_cast<std::size_t>(i) * L + y] = -scale / q.values[static_cast<std::size_t>(i) * L + y];
  }
  return grad;
}

Field3 softmax_backward(const MarginalField& q, const Field3& upstream) {
  require_same_shape(q, upstream);
  const int n = q.height * q.width;
  const int L = q.channels;
  Field3 out(q.height, q.width, L);
  for (int i = 0; i < n; ++i) {
    const double* qi = q.values.data() + static_cast<std::size_t>(i) * L;
    const double* gi = upstream.values.data() + static_cast<std::size_t>(i) * L;
    double dot = 0.0;
    for (int l = 0; l < L; ++l) dot += gi[l] * qi[l];
    double* oi = out.values.data() + static_cast<std::size_t>(i) * L;
    for (int l = 0; l < L; ++l) oi[l] = qi[l] * (gi[l] - dot);
  }
  return out;
}

}  // namespace dcrf
