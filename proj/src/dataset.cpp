#include "dcrf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "dcrf/errors.hpp"
#include "dcrf/io_util.hpp"
#include "dcrf/netpbm.hpp"
#include "dcrf/rng.hpp"

namespace fs = std::filesystem;

namespace dcrf {

Manifest Manifest::load(const std::string& path) {
  const std::string data = read_file(path);
  const fs::path base = fs::path(path).parent_path();
  Manifest m;
  std::istringstream lines(data);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected exactly one tab between two paths");
    ManifestEntry e;
    e.image_path = (base / line.substr(0, tab)).string();
    e.label_path = (base / line.substr(tab + 1)).string();
    if (!fs::exists(e.image_path)) throw DataError(path + ":" + std::to_string(lineno) + ": missing " + e.image_path);
    if (!fs::exists(e.label_path)) throw DataError(path + ":" + std::to_string(lineno) + ": missing " + e.label_path);
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw DataError(path + ": manifest lists no samples");
  return m;
}

Sample load_sample(const ManifestEntry& entry) {
  Sample s{read_ppm(entry.image_path), read_pgm(entry.label_path)};
  if (s.image.height != s.labels.height || s.image.width != s.labels.width)
    throw DataError(entry.label_path + ": label map does not match the image dimensions");
  return s;
}

std::vector<std::vector<int>> make_batches(int sample_count, int batch_size, std::uint64_t seed, int epoch) {
  if (sample_count <= 0) throw DataError("cannot batch an empty dataset");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  std::vector<int> order(sample_count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(epoch) + 0x9e3779b97f4a7c15ull);
  for (int i = sample_count - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < sample_count; start += batch_size) {
    const int end = std::min(start + batch_size, sample_count);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

namespace {

std::array<std::uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c; g = x;
  } else if (hp < 2) {
    r = x; g = c;
  } else if (hp < 3) {
    g = c; b = x;
  } else if (hp < 4) {
    g = x; b = c;
  } else if (hp < 5) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const double m = v - c;
  auto to_byte = [&](double u) { return static_cast<std::uint8_t>(std::lround((u + m) * 255.0)); };
  return {to_byte(r), to_byte(g), to_byte(b)};
}

struct Shape {
  bool ellipse;
  int label;
  int cy, cx, ry, rx;

  bool contains(int y, int x) const {
    if (!ellipse) return std::abs(y - cy) <= ry && std::abs(x - cx) <= rx;
    const double dy = static_cast<double>(y - cy) / ry;
    const double dx = static_cast<double>(x - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
  }
};

Sample draw_sample(int size, int num_labels, double noise_sd, Rng& rng) {
  Sample s{ImageU8(size, size), LabelMap(size, size)};
  LabelSpace space;

  const int max_shapes = std::min(3, num_labels - 1);
  const int count = rng.uniform_int(1, max_shapes);
  std::vector<int> labels(num_labels - 1);
  std::iota(labels.begin(), labels.end(), 1);
  for (int i = static_cast<int>(labels.size()) - 1; i > 0; --i) std::swap(labels[i], labels[rng.uniform_int(0, i)]);

  std::vector<Shape> shapes;
  for (int k = 0; k < count; ++k) {
    Shape sh;
    sh.ellipse = rng.uniform() < 0.5;
    sh.label = labels[k];
    sh.ry = rng.uniform_int(size / 8, size / 3);
    sh.rx = rng.uniform_int(size / 8, size / 3);
    sh.cy = rng.uniform_int(sh.ry, size - 1 - sh.ry);
    sh.cx = rng.uniform_int(sh.rx, size - 1 - sh.rx);
    shapes.push_back(sh);
  }

  LabelMap clean(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      int label = 0;
      for (const auto& sh : shapes)
        if (sh.contains(y, x)) label = sh.label;
      clean.labels[static_cast<std::size_t>(y) * size + x] = label;
    }

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int here = clean.labels[static_cast<std::size_t>(y) * size + x];
      bool boundary = false;
      if (y > 0 && clean.labels[static_cast<std::size_t>(y - 1) * size + x] != here) boundary = true;
      if (y + 1 < size && clean.labels[static_cast<std::size_t>(y + 1) * size + x] != here) boundary = true;
      if (x > 0 && clean.labels[static_cast<std::size_t>(y) * size + x - 1] != here) boundary = true;
      if (x + 1 < size && clean.labels[static_cast<std::size_t>(y) * size + x + 1] != here) boundary = true;
      s.labels.labels[static_cast<std::size_t>(y) * size + x] = boundary ? space.void_label : here;
    }

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const auto base = synth_base_color(clean.labels[static_cast<std::size_t>(y) * size + x]);
      for (int c = 0; c < 3; ++c) {
        double v = base[c];
        if (noise_sd > 0.0) v += noise_sd * rng.normal();
        s.image.rgb[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
      }
    }
  return s;
}

}  // namespace

std::array<std::uint8_t, 3> label_color(int label) {
  if (label == 0) return {32, 32, 32};
  const double hue = std::fmod(static_cast<double>(label - 1) * 137.50776405, 360.0);
  return hsv_to_rgb(hue, 0.85, 0.95);
}

// Base colors sit close enough together that moderate pixel noise produces real
// class confusion; smoothing then has something to recover.
std::array<std::uint8_t, 3> synth_base_color(int label) {
  if (label == 0) return {110, 110, 110};
  const int pattern = (label - 1) % 7 + 1;
  const int ring = (label - 1) / 7;
  const double amp = 34.0 + 18.0 * ring;
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double v = 110.0 + (((pattern >> c) & 1) ? amp : -amp);
    rgb[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 8l, 247l));
  }
  return rgb;
}

Manifest synth_dataset(const std::string& out_dir, int count, int size, int num_labels, double noise_sd,
                       std::uint64_t seed) {
  if (count <= 0 || size < 8) throw ConfigError("dataset needs a positive count and size of at least 8");
  if (num_labels < 2) throw ConfigError("dataset needs at least 2 labels");
  if (noise_sd < 0.0) throw ConfigError("noise level must be nonnegative");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir);

  LabelSpace space;
  std::vector<Sample> samples;
  for (int attempt = 0; attempt < 64; ++attempt) {
    samples.clear();
    samples.reserve(count);
    std::vector<long> histogram(num_labels, 0);
    long counted = 0;
    Rng base = Rng(seed).fork(static_cast<std::uint64_t>(attempt));
    for (int i = 0; i < count; ++i) {
      Rng rng = base.fork(static_cast<std::uint64_t>(i));
      samples.push_back(draw_sample(size, num_labels, noise_sd, rng));
      for (int v : samples.back().labels.labels)
        if (v != space.void_label) {
          ++histogram[v];
          ++counted;
        }
    }
    const bool covered =
        std::all_of(histogram.begin(), histogram.end(), [&](long h) { return h * 100 >= counted; });
    if (covered) break;
    if (attempt == 63) throw DataError("could not cover every label at 1% within 64 attempts");
  }

  std::string manifest_text;
  Manifest m;
  for (int i = 0; i < count; ++i) {
    char img_name[32], lab_name[32];
    std::snprintf(img_name, sizeof img_name, "img_%04d.ppm", i);
    std::snprintf(lab_name, sizeof lab_name, "lab_%04d.pgm", i);
    const std::string img_path = (fs::path(out_dir) / img_name).string();
    const std::string lab_path = (fs::path(out_dir) / lab_name).string();
    write_ppm(img_path, samples[i].image);
    write_pgm(lab_path, samples[i].labels);
    manifest_text += std::string(img_name) + "\t" + lab_name + "\n";
    m.entries.push_back({img_path, lab_path});
  }
  write_file_atomic((fs::path(out_dir) / "manifest.tsv").string(), manifest_text);
  return m;
}

}  // namespace dcrf
