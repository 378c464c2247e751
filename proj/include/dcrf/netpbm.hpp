#ifndef DCRF_NETPBM_HPP
#define DCRF_NETPBM_HPP

#include <string>

#include "dcrf/field.hpp"

namespace dcrf {

// Binary netpbm only: P6 (maxval 255) for images, P5 for label maps. Headers
// may hold comments and arbitrary whitespace; payloads are raw bytes, so a
// write followed by a read is bitwise identity.
ImageU8 read_ppm(const std::string& path);
LabelMap read_pgm(const std::string& path);
void write_ppm(const std::string& path, const ImageU8& image);
void write_pgm(const std::string& path, const LabelMap& labels);

}  // namespace dcrf

#endif
