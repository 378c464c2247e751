#ifndef DCRF_ERRORS_HPP
#define DCRF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dcrf {

// Bad run configuration or command-line usage (process exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed input data (process exit code 2).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dcrf

#endif
