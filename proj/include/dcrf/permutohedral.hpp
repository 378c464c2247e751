#ifndef DCRF_PERMUTOHEDRAL_HPP
#define DCRF_PERMUTOHEDRAL_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace dcrf {

// Open-addressing table mapping lattice keys (d ints) to dense vertex ids.
class LatticeHash {
 public:
  LatticeHash(int key_size, int expected_entries);

  int find_or_insert(const int* key);
  int find(const int* key) const;  // -1 when absent
  int size() const { return filled_; }
  const int* key(int id) const { return keys_.data() + static_cast<std::size_t>(id) * key_size_; }

 private:
  std::size_t slot(const int* key) const;
  void grow();

  int key_size_;
  int filled_ = 0;
  std::size_t capacity_;  // power of two
  std::vector<int> table_;
  std::vector<int> keys_;
};

// Permutohedral lattice over whitened features (features already divided by
// their bandwidths). filter() applies splat, [1, 2, 1] blur passes over the
// d+1 lattice directions in palindromic order (so the vertex operator is
// symmetric by construction), and slice with a calibrated scale constant, and
// approximates out_i = sum_j exp(-|f_i - f_j|^2 / 2) * v_j including j = i.
class PermutohedralLattice {
 public:
  // Negative tuning arguments select calibrated defaults. closure_rings adds
  // that many shells of blur-reachable vertices around the splat support;
  // extra shells improve accuracy on thin feature clouds at a memory cost.
  PermutohedralLattice(const double* features, int num_points, int dim,
                       int blur_passes = -1, double amplitude = -1.0, double prescale = -1.0,
                       int closure_rings = -1);

  // in and out hold num_points * value_size doubles, value channels innermost.
  void filter(const double* in, double* out, int value_size) const;

  int vertex_count() const { return vertices_; }
  int point_count() const { return points_; }
  int dim() const { return dim_; }

 private:
  int points_;
  int dim_;
  int passes_;
  int rings_;
  double amplitude_;
  int vertices_ = 0;
  std::vector<int> offsets_;         // points x (d+1) vertex ids
  std::vector<double> barycentric_;  // points x (d+1)
  std::vector<int> blur_n1_;         // (d+1) x vertices
  std::vector<int> blur_n2_;
  LatticeHash hash_;
};

}  // namespace dcrf

#endif
