#include "dcrf/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "dcrf/backward.hpp"
#include "dcrf/loss.hpp"
#include "dcrf/meanfield.hpp"
#include "dcrf/rng.hpp"
#include "dcrf/softmax.hpp"
#include "dcrf/trainer.hpp"

namespace dcrf {

namespace {

constexpr double kRelTol = 1e-4;
constexpr double kAbsTol = 1e-7;
constexpr double kStep = 1e-5;

struct Instance {
  ImageU8 image;
  LabelMap gt;
  LabelSpace labels;
};

Instance random_instance(int size, int num_labels, Rng& rng) {
  Instance inst{ImageU8(size, size), LabelMap(size, size), LabelSpace{num_labels}};
  for (auto& b : inst.image.rgb) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  for (auto& l : inst.gt.labels)
    l = rng.uniform() < 0.0625 ? inst.labels.void_label : rng.uniform_int(0, num_labels - 1);
  return inst;
}

double pipeline_loss(UnaryProvider& provider, const PairwiseModel& model, const RunConfig& cfg,
                     const Instance& inst, const std::vector<FilterPlan>* plans) {
  ScoreField scores = provider.forward(inst.image);
  if (!cfg.crf.enabled) return loss_nll(softmax_normalize(scores), inst.gt, inst.labels, cfg.loss).value;
  MfConfig mf;
  mf.iterations = cfg.crf.iterations;
  mf.filter_mode = FilterMode::brute;
  std::vector<FilterPlan> rebuilt;
  if (!plans) {
    rebuilt = build_plans(inst.image, model, FilterMode::brute, false);
    plans = &rebuilt;
  }
  return loss_nll(mf_infer(scores, model, *plans, mf).final_q(), inst.gt, inst.labels, cfg.loss).value;
}

void record(std::map<std::string, GradCheckRow>& rows, const std::string& name, double analytic, double numeric) {
  auto& row = rows[name];
  row.name = name;
  ++row.checked;
  const double abs_err = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
  if (abs_err > row.max_abs_err) row.max_abs_err = abs_err;
  if (abs_err > kAbsTol && rel_err > row.max_rel_err) row.max_rel_err = rel_err;
  if (abs_err > kAbsTol && rel_err > kRelTol) row.pass = false;
}

}  // namespace

GradCheckReport run_gradcheck(const RunConfig& config, std::uint64_t seed, int size, int instances) {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, GradCheckRow> rows;

  for (int k = 0; k < instances; ++k) {
    Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(k));
    Instance inst = random_instance(size, config.labels, rng);
    auto provider = make_unary(config.unary, config.labels, rng.next_u64());
    for (auto& p : provider->params())
      if (p.name.find("bias") != std::string::npos)
        for (double& v : p.value) v = rng.uniform(-0.1, 0.1);
    PairwiseModel model = config.make_pairwise();
    for (auto& kern : model.kernels) {
      kern.weight *= rng.uniform(0.5, 2.0);
      for (double& s : kern.spec.sigma) s *= rng.uniform(0.8, 1.25);
    }

    // Analytic gradients for the whole pipeline.
    provider->zero_grad();
    GradientBundle bundle;
    if (config.crf.enabled) {
      auto plans = build_plans(inst.image, model, FilterMode::brute, false);
      ScoreField scores = provider->forward(inst.image);
      MfConfig mf;
      mf.iterations = config.crf.iterations;
      mf.filter_mode = FilterMode::brute;
      MfTrajectory traj = mf_infer(scores, model, plans, mf);
      bundle = mf_backward(traj, model, plans, inst.gt, inst.labels, SigmaGradMode::brute, config.loss);
      provider->backward(bundle.d_unary);
    } else {
      ScoreField scores = provider->forward(inst.image);
      MarginalField q = softmax_normalize(scores);
      provider->backward(softmax_backward(q, loss_grad_marginals(q, inst.gt, inst.labels, config.loss)));
      bundle = zero_bundle(model, inst.image.height, inst.image.width, config.labels);
    }

    // Provider parameters: the filter plans do not depend on them, so reuse.
    {
      std::vector<FilterPlan> plans;
      if (config.crf.enabled) plans = build_plans(inst.image, model, FilterMode::brute, false);
      const std::vector<FilterPlan>* plan_ptr = config.crf.enabled ? &plans : nullptr;
      for (auto& p : provider->params())
        for (std::size_t i = 0; i < p.value.size(); ++i) {
          const double saved = p.value[i];
          p.value[i] = saved + kStep;
          const double up = pipeline_loss(*provider, model, config, inst, plan_ptr);
          p.value[i] = saved - kStep;
          const double down = pipeline_loss(*provider, model, config, inst, plan_ptr);
          p.value[i] = saved;
          record(rows, "unary." + p.name, p.grad[i], (up - down) / (2.0 * kStep));
        }
    }

    if (config.crf.enabled) {
      auto plans = build_plans(inst.image, model, FilterMode::brute, false);
      for (std::size_t m = 0; m < model.kernels.size(); ++m) {
        double& w = model.kernels[m].weight;
        const double saved = w;
        w = saved + kStep;
        const double up = pipeline_loss(*provider, model, config, inst, &plans);
        w = saved - kStep;
        const double down = pipeline_loss(*provider, model, config, inst, &plans);
        w = saved;
        record(rows, "crf.weights", bundle.d_weights[m], (up - down) / (2.0 * kStep));
      }
      for (std::size_t m = 0; m < model.kernels.size(); ++m)
        for (std::size_t d = 0; d < model.kernels[m].spec.sigma.size(); ++d) {
          double& s = model.kernels[m].spec.sigma[d];
          const double saved = s;
          s = saved + kStep;
          const double up = pipeline_loss(*provider, model, config, inst, nullptr);
          s = saved - kStep;
          const double down = pipeline_loss(*provider, model, config, inst, nullptr);
          s = saved;
          record(rows, "crf.sigma." + std::to_string(m), bundle.d_sigma[m][d], (up - down) / (2.0 * kStep));
        }
      if (model.compat.mode == CompatMode::matrix)
        for (std::size_t e = 0; e < model.compat.matrix.size(); ++e) {
          double& mu = model.compat.matrix[e];
          const double saved = mu;
          mu = saved + kStep;
          const double up = pipeline_loss(*provider, model, config, inst, &plans);
          mu = saved - kStep;
          const double down = pipeline_loss(*provider, model, config, inst, &plans);
          mu = saved;
          record(rows, "crf.compat", bundle.d_compat[e], (up - down) / (2.0 * kStep));
        }
    }
  }

  GradCheckReport report;
  for (auto& [name, row] : rows) {
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string format_gradcheck(const GradCheckReport& report) {
  std::string out = "parameter                 checked      max_abs      max_rel  status\n";
  char line[160];
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%-24s %8ld %12.3e %12.3e  %s\n", row.name.c_str(), row.checked,
                  row.max_abs_err, row.max_rel_err, row.pass ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "overall: %s (%.1fs)\n", report.pass ? "pass" : "FAIL", report.seconds);
  out += line;
  return out;
}

}  // namespace dcrf
