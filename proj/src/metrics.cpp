#include "dcrf/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dcrf {

ConfusionMatrix::ConfusionMatrix(int num_labels) : num_labels_(num_labels) {
  if (num_labels <= 0) throw std::invalid_argument("label count must be positive");
  counts_.assign(static_cast<std::size_t>(num_labels) * num_labels, 0);
}

void ConfusionMatrix::accumulate(const LabelMap& gt, const LabelMap& pred, const LabelSpace& labels) {
  if (gt.height != pred.height || gt.width != pred.width)
    throw std::invalid_argument("label maps cover different grids");
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const int g = gt.labels[i];
    if (g == labels.void_label) continue;
    const int p = pred.labels[i];
    if (g < 0 || g >= num_labels_ || p < 0 || p >= num_labels_)
      throw std::invalid_argument("label value outside the matrix at pixel " + std::to_string(i));
    ++counts_[static_cast<std::size_t>(g) * num_labels_ + p];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_labels_ != num_labels_) throw std::invalid_argument("confusion matrices differ in size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

long ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0l); }

std::vector<double> iou_per_class(const ConfusionMatrix& cm) {
  const int L = cm.num_labels();
  std::vector<double> iou(L);
  for (int c = 0; c < L; ++c) {
    const long tp = cm.at(c, c);
    long fp = 0, fn = 0;
    for (int o = 0; o < L; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const long denom = tp + fp + fn;
    iou[c] = denom == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(tp) / denom;
  }
  return iou;
}

double mean_iou(const ConfusionMatrix& cm) {
  const auto iou = iou_per_class(cm);
  double sum = 0.0;
  int defined = 0;
  for (double v : iou)
    if (!std::isnan(v)) {
      sum += v;
      ++defined;
    }
  return defined == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / defined;
}

}  // namespace dcrf
