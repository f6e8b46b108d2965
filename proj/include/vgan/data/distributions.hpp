// Synthetic target distributions with exact densities and seeded samplers.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vgan/data/rng.hpp"
#include "vgan/diffmath/tape.hpp"

namespace vgan::data {

using diffmath::Matrix;

enum class DistKind { kRing, kGrid, kMixture1d, kCategorical };

const char* dist_kind_name(DistKind kind);
DistKind parse_dist_kind(const std::string& name);

struct DistSpec {
  DistKind kind = DistKind::kRing;
  // ring
  std::size_t n_modes = 8;
  double radius = 2.0;
  // grid
  std::size_t rows = 5;
  std::size_t cols = 5;
  double spacing = 1.0;
  // ring / grid component standard deviation
  double sigma = 0.05;
  // mixture-1d
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;
  // categorical
  std::vector<double> probs;

  static DistSpec ring(std::size_t n_modes, double radius, double sigma);
  static DistSpec grid(std::size_t rows, std::size_t cols, double spacing, double sigma);
  static DistSpec mixture_1d(std::vector<double> weights, std::vector<double> means,
                             std::vector<double> sigmas);
  static DistSpec categorical(std::vector<double> probs);

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
  std::size_t dim() const;
  /// Mixture component centers (ring, grid, mixture-1d).
  std::vector<std::vector<double>> centers() const;
  /// Largest component standard deviation.
  double component_sigma() const;

  bool operator==(const DistSpec&) const = default;
};

enum class Provenance { kReal, kFake, kInterpolated, kNoise };

/// n points stored as rows of an n x d matrix. Categorical samples are an
/// n x 1 column of integer-valued outcome indices.
struct Batch {
  Matrix points;
  Provenance provenance = Provenance::kReal;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  bool operator==(const Batch& o) const {
    return provenance == o.provenance && points.rows() == o.points.rows() &&
           points.cols() == o.points.cols() && points == o.points;
  }
};

Batch sample_real(const DistSpec& spec, std::size_t n, SplitMix64& rng);

/// Exact pdf (continuous kinds) or pmf (categorical: x[0] is the index).
double density(const DistSpec& spec, std::span<const double> x);
double log_density(const DistSpec& spec, std::span<const double> x);

Batch sample_noise(std::size_t dim, std::size_t n, SplitMix64& rng);

/// x = u * real + (1 - u) * fake with u ~ U[0, 1] drawn once per pair.
Batch interpolate(const Batch& real, const Batch& fake, SplitMix64& rng);
/// Same with caller-provided mixing coefficients, one per pair.
Batch interpolate_with(const Batch& real, const Batch& fake, std::span<const double> u);

}  // namespace vgan::data
