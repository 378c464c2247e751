#ifndef DCRF_CHECKPOINT_HPP
#define DCRF_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dcrf {

// Single little-endian binary file: magic "DCRF", version u32, length-prefixed
// config JSON, then named length-prefixed arrays of f64 in a fixed order, so
// save -> load -> save is byte identical.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string config_json;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  void set(const std::string& name, std::vector<double> values);
  const std::vector<double>* find(const std::string& name) const;
  const std::vector<double>& require(const std::string& name) const;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& data, const std::string& source_name);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace dcrf

#endif
