#ifndef DCRF_OPTIM_HPP
#define DCRF_OPTIM_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

namespace dcrf {

// One updatable parameter vector. Weight decay applies only where decay is
// set; min_value projects entries after the update (bandwidth positivity).
struct ParamUpdate {
  std::string name;
  std::string group;
  std::span<double> value;
  std::span<const double> grad;
  bool decay = false;
  double min_value = -1e300;
};

struct OptimSettings {
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::map<std::string, double> learning_rate;  // by group

  void validate() const;
};

// SGD with momentum: v <- beta v + g + lambda theta, theta <- theta - eta_g v.
// Velocity buffers are keyed by parameter name and persist across steps.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(OptimSettings settings);

  // Velocities always advance; a zero learning rate skips the write to theta
  // so that group stays bitwise untouched.
  void step(std::span<ParamUpdate> params);

  const OptimSettings& settings() const { return settings_; }
  std::map<std::string, std::vector<double>>& velocities() { return velocity_; }
  const std::map<std::string, std::vector<double>>& velocities() const { return velocity_; }

 private:
  OptimSettings settings_;
  std::map<std::string, std::vector<double>> velocity_;
};

}  // namespace dcrf

#endif
