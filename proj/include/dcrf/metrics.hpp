#ifndef DCRF_METRICS_HPP
#define DCRF_METRICS_HPP

#include <vector>

#include "dcrf/field.hpp"

namespace dcrf {

// Rows are ground truth, columns predictions; void pixels never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_labels);

  void accumulate(const LabelMap& gt, const LabelMap& pred, const LabelSpace& labels);
  void merge(const ConfusionMatrix& other);

  long at(int gt, int pred) const { return counts_[static_cast<std::size_t>(gt) * num_labels_ + pred]; }
  long total() const;
  int num_labels() const { return num_labels_; }

 private:
  int num_labels_;
  std::vector<long> counts_;
};

// IoU_c = TP / (TP + FP + FN); classes with empty union come back as NaN and
// are skipped by the mean.
std::vector<double> iou_per_class(const ConfusionMatrix& cm);
double mean_iou(const ConfusionMatrix& cm);

}  // namespace dcrf

#endif
