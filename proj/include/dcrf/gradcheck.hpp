#ifndef DCRF_GRADCHECK_HPP
#define DCRF_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dcrf/config.hpp"

namespace dcrf {

struct GradCheckRow {
  std::string name;       // parameter tensor, kernel weight, bandwidth, or compatibility entry group
  long checked = 0;       // scalars compared
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool pass = true;
  double seconds = 0.0;
};

// Compares every learnable scalar's analytic gradient against central finite
// differences of the full pipeline loss on random instances. Filtering runs
// in brute mode with analytic bandwidth gradients, whatever the config says,
// since the comparison targets the exact operator. Tolerances: 1e-4 relative
// with a 1e-7 absolute floor, steps of 1e-5.
GradCheckReport run_gradcheck(const RunConfig& config, std::uint64_t seed, int size, int instances);

std::string format_gradcheck(const GradCheckReport& report);

}  // namespace dcrf

#endif
