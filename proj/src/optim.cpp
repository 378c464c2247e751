#include "dcrf/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dcrf {

void OptimSettings::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be nonnegative");
  for (const auto& [group, eta] : learning_rate)
    if (!(eta >= 0.0)) throw std::invalid_argument("learning rate for group '" + group + "' must be nonnegative");
}

SgdOptimizer::SgdOptimizer(OptimSettings settings) : settings_(std::move(settings)) { settings_.validate(); }

void SgdOptimizer::step(std::span<ParamUpdate> params) {
  for (const auto& p : params)
    for (double g : p.grad)
      if (!std::isfinite(g))
        throw std::invalid_argument("non-finite gradient for parameter '" + p.name + "'; step rejected");

  for (auto& p : params) {
    if (p.grad.size() != p.value.size()) throw std::invalid_argument("gradient size mismatch for '" + p.name + "'");
    auto it = settings_.learning_rate.find(p.group);
    if (it == settings_.learning_rate.end())
      throw std::invalid_argument("no learning rate configured for group '" + p.group + "'");
    const double eta = it->second;
    auto& v = velocity_[p.name];
    if (v.size() != p.value.size()) v.assign(p.value.size(), 0.0);
    const double lambda = p.decay ? settings_.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      v[i] = settings_.momentum * v[i] + p.grad[i] + lambda * p.value[i];
      if (eta != 0.0) {
        p.value[i] -= eta * v[i];
        if (p.value[i] < p.min_value) p.value[i] = p.min_value;
      }
    }
  }
}

}  // namespace dcrf
