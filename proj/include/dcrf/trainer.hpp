#ifndef DCRF_TRAINER_HPP
#define DCRF_TRAINER_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcrf/checkpoint.hpp"
#include "dcrf/config.hpp"
#include "dcrf/dataset.hpp"
#include "dcrf/field.hpp"
#include "dcrf/optim.hpp"
#include "dcrf/pairwise.hpp"
#include "dcrf/unary.hpp"

namespace dcrf {

// Everything a run carries: provider, CRF parameters, optimizer velocities,
// counters. best_miou is -1 until a validation pass has produced one.
struct ModelState {
  RunConfig config;
  std::unique_ptr<UnaryProvider> provider;
  PairwiseModel pairwise;
  SgdOptimizer optimizer;
  long epoch = 0;
  long step = 0;
  double best_miou = -1.0;

  ModelState(RunConfig cfg, std::unique_ptr<UnaryProvider> prov, PairwiseModel pw, SgdOptimizer opt)
      : config(std::move(cfg)), provider(std::move(prov)), pairwise(std::move(pw)), optimizer(std::move(opt)) {}
};

ModelState build_state(const RunConfig& config);

// Fits the linear provider's feature statistics over a training set; other
// providers are left alone.
void standardize_linear(ModelState& state, const Manifest& train);
Checkpoint state_to_checkpoint(const ModelState& state);
ModelState state_from_checkpoint(const Checkpoint& ckpt);
// Loads parameters, velocities, and counters from ckpt into a state built for
// config; shapes must agree.
ModelState resume_state(const RunConfig& config, const Checkpoint& ckpt);

std::vector<FilterPlan> build_plans(const ImageU8& image, const PairwiseModel& model, FilterMode mode,
                                    bool normalize);

// Final marginals for one image: softmax of the unary when the CRF is off,
// the mean-field result otherwise.
MarginalField predict_marginals(ModelState& state, const ImageU8& image, bool crf_active);

struct StepOutcome {
  double loss = 0.0;
  long counted_pixels = 0;
  bool applied = true;
  std::string note;
};

StepOutcome train_step(std::span<const Sample> batch, ModelState& state, bool crf_active);

struct EvalOutcome {
  double mean_loss = 0.0;
  double miou = 0.0;
};

EvalOutcome evaluate(const Manifest& manifest, ModelState& state, bool crf_active);

}  // namespace dcrf

#endif
