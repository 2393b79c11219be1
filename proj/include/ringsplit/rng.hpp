#pragma once

#include <cstdint>
#include <random>

#include "ringsplit/common.hpp"

namespace ringsplit {

// Deterministic across platforms: std::mt19937_64 has a fully specified output
// sequence and the uniform mapping below avoids the implementation-defined
// std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vector vector(Eigen::Index dim, double lo, double hi) {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ringsplit
