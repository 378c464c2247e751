#include "dcrf/permutohedral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace dcrf {

namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Slice amplitude and feature prescale aligning the realized kernel with
// exp(-|df|^2 / 2) under kDefaultPasses palindromic blur passes, fitted per
// dimension against brute-force filtering of representative feature clouds
// (tables exercised by the filter tests).
constexpr int kDefaultPasses = 2;
constexpr int kDefaultRings = 1;
constexpr double kAmplitude[9] = {1.0,         5.211144,    23.710176,   107.975987,
                                  465.460914,  2018.106054, 8863.036243, 36170.610491,
                                  147600.0};
constexpr double kPrescale[9] = {1.0, 1.80, 1.80, 1.85, 1.85, 1.90, 1.90, 1.90, 1.90};

}  // namespace

LatticeHash::LatticeHash(int key_size, int expected_entries)
    : key_size_(key_size),
      capacity_(next_pow2(std::max<std::size_t>(16, 2 * static_cast<std::size_t>(std::max(expected_entries, 1))))) {
  table_.assign(capacity_, -1);
  keys_.reserve(static_cast<std::size_t>(expected_entries) * key_size_);
}

std::size_t LatticeHash::slot(const int* key) const {
  std::size_t h = 0;
  for (int i = 0; i < key_size_; ++i) {
    h += static_cast<std::size_t>(static_cast<unsigned>(key[i]));
    h *= 2654435761u;
  }
  return h & (capacity_ - 1);
}

void LatticeHash::grow() {
  capacity_ *= 2;
  table_.assign(capacity_, -1);
  for (int id = 0; id < filled_; ++id) {
    std::size_t s = slot(key(id));
    while (table_[s] >= 0) s = (s + 1) & (capacity_ - 1);
    table_[s] = id;
  }
}

int LatticeHash::find_or_insert(const int* key_in) {
  if (static_cast<std::size_t>(filled_) * 2 >= capacity_) grow();
  std::size_t s = slot(key_in);
  while (true) {
    int id = table_[s];
    if (id < 0) {
      keys_.insert(keys_.end(), key_in, key_in + key_size_);
      table_[s] = filled_;
      return filled_++;
    }
    if (std::memcmp(key(id), key_in, key_size_ * sizeof(int)) == 0) return id;
    s = (s + 1) & (capacity_ - 1);
  }
}

int LatticeHash::find(const int* key_in) const {
  std::size_t s = slot(key_in);
  while (true) {
    int id = table_[s];
    if (id < 0) return -1;
    if (std::memcmp(key(id), key_in, key_size_ * sizeof(int)) == 0) return id;
    s = (s + 1) & (capacity_ - 1);
  }
}

PermutohedralLattice::PermutohedralLattice(const double* features, int num_points, int dim,
                                           int blur_passes, double amplitude, double prescale,
                                           int closure_rings)
    : points_(num_points),
      dim_(dim),
      passes_(blur_passes >= 0 ? blur_passes : kDefaultPasses),
      rings_(closure_rings >= 0 ? closure_rings : kDefaultRings),
      hash_(dim, num_points * (dim + 1)) {
  if (num_points <= 0 || dim <= 0) throw std::invalid_argument("lattice needs points and a positive feature dim");
  if (passes_ <= 0) throw std::invalid_argument("lattice needs at least one blur pass");
  const int d = dim_;
  const int table_d = std::min(d, 8);
  amplitude_ = amplitude >= 0.0 ? amplitude : kAmplitude[table_d];
  const double gamma = prescale > 0.0 ? prescale : kPrescale[table_d];
  offsets_.resize(static_cast<std::size_t>(points_) * (d + 1));
  barycentric_.resize(static_cast<std::size_t>(points_) * (d + 1));

  // Scaling that makes the expected lattice spacing match a unit-bandwidth
  // Gaussian after the blur passes along every axis.
  std::vector<double> scale(d);
  const double inv_std_dev = gamma * std::sqrt(2.0 / 3.0) * (d + 1);
  for (int i = 0; i < d; ++i) scale[i] = inv_std_dev / std::sqrt(static_cast<double>(i + 1) * (i + 2));

  // canonical[r * (d+1) + rank] is the offset of simplex vertex r along the
  // coordinate with that rank.
  std::vector<int> canonical((d + 1) * (d + 1));
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; j <= d - i; ++j) canonical[i * (d + 1) + j] = i;
    for (int j = d - i + 1; j <= d; ++j) canonical[i * (d + 1) + j] = i - (d + 1);
  }

  std::vector<double> elevated(d + 1), rem0(d + 1), bary(d + 2);
  std::vector<int> rank(d + 1), key(d);
  const double down = 1.0 / (d + 1);

  for (int p = 0; p < points_; ++p) {
    const double* f = features + static_cast<std::size_t>(p) * d;

    // Embed into the hyperplane sum(x) = 0 in d+1 coordinates.
    double sm = 0.0;
    for (int j = d; j > 0; --j) {
      const double cf = f[j - 1] * scale[j - 1];
      elevated[j] = sm - j * cf;
      sm += cf;
    }
    elevated[0] = sm;

    // Nearest remainder-zero lattice point.
    int coord_sum = 0;
    for (int i = 0; i <= d; ++i) {
      const int rd = static_cast<int>(std::lround(elevated[i] * down));
      rem0[i] = static_cast<double>(rd) * (d + 1);
      coord_sum += rd;
    }

    // Rank differentials, then fold coordinates back into the valid range.
    std::fill(rank.begin(), rank.end(), 0);
    for (int i = 0; i < d; ++i) {
      const double di = elevated[i] - rem0[i];
      for (int j = i + 1; j <= d; ++j) {
        if (di < elevated[j] - rem0[j])
          ++rank[i];
        else
          ++rank[j];
      }
    }
    for (int i = 0; i <= d; ++i) {
      rank[i] += coord_sum;
      if (rank[i] < 0) {
        rank[i] += d + 1;
        rem0[i] += d + 1;
      } else if (rank[i] > d) {
        rank[i] -= d + 1;
        rem0[i] -= d + 1;
      }
    }

    std::fill(bary.begin(), bary.end(), 0.0);
    for (int i = 0; i <= d; ++i) {
      const double v = (elevated[i] - rem0[i]) * down;
      bary[d - rank[i]] += v;
      bary[d - rank[i] + 1] -= v;
    }
    bary[0] += 1.0 + bary[d + 1];

    for (int r = 0; r <= d; ++r) {
      for (int i = 0; i < d; ++i) key[i] = static_cast<int>(rem0[i]) + canonical[r * (d + 1) + rank[i]];
      offsets_[static_cast<std::size_t>(p) * (d + 1) + r] = hash_.find_or_insert(key.data());
      barycentric_[static_cast<std::size_t>(p) * (d + 1) + r] = bary[r];
    }
  }
  std::vector<int> n1(d), n2(d);
  const auto neighbour_keys = [&](const int* k, int axis) {
    for (int i = 0; i < d; ++i) {
      n1[i] = k[i] - 1;
      n2[i] = k[i] + 1;
    }
    if (axis < d) {
      n1[axis] = k[axis] + d;
      n2[axis] = k[axis] - d;
    }
  };

  // Widen the stored vertex set by blur-reachable shells around the splat
  // support; mass the blur moves onto stored vertices later flows back instead
  // of being dropped, which matters on thin feature clouds.
  std::vector<int> scratch(d);
  for (int ring = 0; ring < rings_; ++ring) {
    for (int axis = 0; axis <= d; ++axis) {
      const int frontier = hash_.size();
      for (int v = 0; v < frontier; ++v) {
        std::memcpy(scratch.data(), hash_.key(v), d * sizeof(int));
        neighbour_keys(scratch.data(), axis);
        hash_.find_or_insert(n1.data());
        hash_.find_or_insert(n2.data());
      }
    }
  }
  vertices_ = hash_.size();

  // Neighbour ids along each of the d+1 blur axes; -1 routes to the zero slot.
  blur_n1_.resize(static_cast<std::size_t>(d + 1) * vertices_);
  blur_n2_.resize(static_cast<std::size_t>(d + 1) * vertices_);
  for (int axis = 0; axis <= d; ++axis) {
    for (int v = 0; v < vertices_; ++v) {
      neighbour_keys(hash_.key(v), axis);
      blur_n1_[static_cast<std::size_t>(axis) * vertices_ + v] = hash_.find(n1.data());
      blur_n2_[static_cast<std::size_t>(axis) * vertices_ + v] = hash_.find(n2.data());
    }
  }
}

void PermutohedralLattice::filter(const double* in, double* out, int value_size) const {
  const int d = dim_;
  const int vs = value_size;
  // Slot 0 stays zero and absorbs reads from missing neighbours.
  std::vector<double> values(static_cast<std::size_t>(vertices_ + 1) * vs, 0.0);
  std::vector<double> fresh(static_cast<std::size_t>(vertices_ + 1) * vs, 0.0);

  for (int p = 0; p < points_; ++p) {
    const double* v = in + static_cast<std::size_t>(p) * vs;
    for (int r = 0; r <= d; ++r) {
      const int o = offsets_[static_cast<std::size_t>(p) * (d + 1) + r] + 1;
      const double w = barycentric_[static_cast<std::size_t>(p) * (d + 1) + r];
      double* dst = values.data() + static_cast<std::size_t>(o) * vs;
      for (int c = 0; c < vs; ++c) dst[c] += w * v[c];
    }
  }

  // Palindromic axis order: the per-axis blur is symmetric on the stored set,
  // so a sequence equal to its own reverse makes the composite symmetric too.
  const int sweeps = 2 * passes_ * (d + 1);
  for (int step = 0; step < sweeps; ++step) {
    const int phase = step % (2 * (d + 1));
    const int axis = phase <= d ? phase : 2 * d + 1 - phase;
    const int* na = blur_n1_.data() + static_cast<std::size_t>(axis) * vertices_;
    const int* nb = blur_n2_.data() + static_cast<std::size_t>(axis) * vertices_;
    for (int v = 0; v < vertices_; ++v) {
      const double* old = values.data() + static_cast<std::size_t>(v + 1) * vs;
      const double* va = values.data() + static_cast<std::size_t>(na[v] + 1) * vs;
      const double* vb = values.data() + static_cast<std::size_t>(nb[v] + 1) * vs;
      double* nv = fresh.data() + static_cast<std::size_t>(v + 1) * vs;
      for (int c = 0; c < vs; ++c) nv[c] = 0.5 * old[c] + 0.25 * (va[c] + vb[c]);
    }
    std::swap(values, fresh);
  }

  for (int p = 0; p < points_; ++p) {
    double* o = out + static_cast<std::size_t>(p) * vs;
    std::fill(o, o + vs, 0.0);
    for (int r = 0; r <= d; ++r) {
      const int vtx = offsets_[static_cast<std::size_t>(p) * (d + 1) + r] + 1;
      const double w = barycentric_[static_cast<std::size_t>(p) * (d + 1) + r] * amplitude_;
      const double* src = values.data() + static_cast<std::size_t>(vtx) * vs;
      for (int c = 0; c < vs; ++c) o[c] += w * src[c];
    }
  }
}

}  // namespace dcrf
