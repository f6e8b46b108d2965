// Hand-rolled generators for property tests. Every generator is driven by a
// SplitMix64 so failures reproduce from the printed seed.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vgan/data/rng.hpp"
#include "vgan/diffmath/tape.hpp"

namespace vgan::testing {

using diffmath::Matrix;

inline std::vector<double> uniform_vector(data::SplitMix64& rng, std::size_t n, double lo,
                                          double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline Matrix uniform_matrix(data::SplitMix64& rng, std::size_t rows, std::size_t cols, double lo,
                             double hi) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

/// Random strictly positive pmf of length k.
inline std::vector<double> random_pmf(data::SplitMix64& rng, std::size_t k) {
  std::vector<double> p(k);
  double total = 0.0;
  for (double& x : p) {
    x = -std::log(1.0 - rng.uniform()) + 1e-3;
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

/// Random pmf with some entries exactly zero (at least one positive).
inline std::vector<double> sparse_pmf(data::SplitMix64& rng, std::size_t k) {
  std::vector<double> p = random_pmf(rng, k);
  const std::size_t keep = static_cast<std::size_t>(rng.below(k));
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (i != keep && rng.uniform() < 0.3) p[i] = 0.0;
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

inline double rel_error(double a, double b) { return std::abs(a - b) / (std::abs(b) + 1e-12); }

}  // namespace vgan::testing
