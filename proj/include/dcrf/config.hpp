#ifndef DCRF_CONFIG_HPP
#define DCRF_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dcrf/backward.hpp"
#include "dcrf/features.hpp"
#include "dcrf/filter.hpp"
#include "dcrf/loss.hpp"
#include "dcrf/meanfield.hpp"
#include "dcrf/pairwise.hpp"

namespace dcrf {

struct KernelConfig {
  FeatureKind kind = FeatureKind::spatial;
  std::vector<double> sigma;
  double weight = 1.0;
};

struct CrfConfig {
  bool enabled = true;
  std::vector<KernelConfig> kernels;
  CompatMode compatibility = CompatMode::potts;
  std::vector<double> compatibility_matrix;  // row-major, identity when empty
  int iterations = 5;
  FilterMode filter_mode = FilterMode::lattice;
  SigmaGradMode sigma_grad = SigmaGradMode::frozen;
  bool normalize_filter = false;
};

struct OptimConfig {
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double lr_top = 0.01;
  double lr_body = 0.001;
  double lr_crf = 0.01;
  bool weight_decay_crf = false;
};

struct TrainingConfig {
  int epochs = 10;
  int batch_size = 20;
  std::uint64_t seed = 1;
};

struct RunConfig {
  int labels = 0;
  std::string unary = "linear";  // linear | convnet
  CrfConfig crf;
  OptimConfig optimizer;
  TrainingConfig training;
  LossNorm loss = LossNorm::mean;

  void validate() const;
  PairwiseModel make_pairwise() const;
};

// Strict JSON: unknown keys anywhere are rejected.
RunConfig parse_run_config(const std::string& json_text, const std::string& source_name);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);

}  // namespace dcrf

#endif
