#include "dcrf/netpbm.hpp"

#include <cctype>
#include <string>

#include "dcrf/errors.hpp"
#include "dcrf/io_util.hpp"

namespace dcrf {

namespace {

struct HeaderParser {
  const std::string& data;
  const std::string& path;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path + ": " + what + " at byte offset " + std::to_string(pos));
  }

  void skip_separators() {
    while (pos < data.size()) {
      const char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        return;
      }
    }
  }

  int read_int() {
    skip_separators();
    if (pos >= data.size() || !std::isdigit(static_cast<unsigned char>(data[pos]))) fail("expected a decimal value");
    long v = 0;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + (data[pos] - '0');
      if (v > 1'000'000'000) fail("value out of range");
      ++pos;
    }
    return static_cast<int>(v);
  }
};

// Returns the payload offset after magic, width, height, maxval and the
// single separator byte that ends the header.
std::size_t parse_header(const std::string& data, const std::string& path, const char* magic, int& width,
                         int& height) {
  HeaderParser p{data, path};
  if (data.size() < 2 || data[0] != magic[0] || data[1] != magic[1])
    throw DataError(path + ": expected magic " + magic + " at byte offset 0");
  p.pos = 2;
  width = p.read_int();
  height = p.read_int();
  const int maxval = p.read_int();
  if (width <= 0 || height <= 0) p.fail("image dimensions must be positive");
  if (maxval != 255) p.fail("only maxval 255 is supported");
  if (p.pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[p.pos]))) p.fail("expected a separator");
  return p.pos + 1;
}

}  // namespace

ImageU8 read_ppm(const std::string& path) {
  const std::string data = read_file(path);
  int width, height;
  const std::size_t payload = parse_header(data, path, "P6", width, height);
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (data.size() - payload < need)
    throw DataError(path + ": payload truncated at byte offset " + std::to_string(data.size()));
  ImageU8 image(height, width);
  for (std::size_t i = 0; i < need; ++i) image.rgb[i] = static_cast<std::uint8_t>(data[payload + i]);
  return image;
}

LabelMap read_pgm(const std::string& path) {
  const std::string data = read_file(path);
  int width, height;
  const std::size_t payload = parse_header(data, path, "P5", width, height);
  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (data.size() - payload < need)
    throw DataError(path + ": payload truncated at byte offset " + std::to_string(data.size()));
  LabelMap labels(height, width);
  for (std::size_t i = 0; i < need; ++i) labels.labels[i] = static_cast<std::uint8_t>(data[payload + i]);
  return labels;
}

void write_ppm(const std::string& path, const ImageU8& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.rgb.size());
  for (std::uint8_t b : image.rgb) out.push_back(static_cast<char>(b));
  write_file_atomic(path, out);
}

void write_pgm(const std::string& path, const LabelMap& labels) {
  std::string out = "P5\n" + std::to_string(labels.width) + " " + std::to_string(labels.height) + "\n255\n";
  out.reserve(out.size() + labels.labels.size());
  for (int v : labels.labels) {
    if (v < 0 || v > 255) throw DataError(path + ": label value " + std::to_string(v) + " does not fit a byte");
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  write_file_atomic(path, out);
}

}  // namespace dcrf
