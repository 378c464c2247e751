#ifndef DCRF_DATASET_HPP
#define DCRF_DATASET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dcrf/field.hpp"

namespace dcrf {

struct Sample {
  ImageU8 image;
  LabelMap labels;
};

struct ManifestEntry {
  std::string image_path;  // resolved against the manifest directory
  std::string label_path;
};

// One line per sample: image path, tab, label path, both relative to the
// manifest's own directory.
struct Manifest {
  std::vector<ManifestEntry> entries;

  static Manifest load(const std::string& path);
};

Sample load_sample(const ManifestEntry& entry);

// Index batches under a shuffle keyed by (seed, epoch); the last short batch
// is kept.
std::vector<std::vector<int>> make_batches(int sample_count, int batch_size, std::uint64_t seed, int epoch);

// Distinct overlay colors, label 0 dark background, the rest hue-spaced.
std::array<std::uint8_t, 3> label_color(int label);

// Clean per-label paint used by the generator.
std::array<std::uint8_t, 3> synth_base_color(int label);

// Writes count PPM/PGM pairs of random rectangles and ellipses over a
// background, plus manifest.tsv. Labels are the clean masks with a void ring
// along shape boundaries; images carry clamped Gaussian noise. Regenerates
// with a derived seed until every label covers at least 1% of the pixels.
Manifest synth_dataset(const std::string& out_dir, int count, int size, int num_labels, double noise_sd,
                       std::uint64_t seed);

}  // namespace dcrf

#endif
