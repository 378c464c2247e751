#ifndef DCRF_IO_UTIL_HPP
#define DCRF_IO_UTIL_HPP

#include <string>
#include <string_view>

namespace dcrf {

std::string read_file(const std::string& path);

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a partial file.
void write_file_atomic(const std::string& path, std::string_view data);

}  // namespace dcrf

#endif
