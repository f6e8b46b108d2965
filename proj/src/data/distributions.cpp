#include "vgan/data/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace vgan::data {

const char* dist_kind_name(DistKind kind) {
  switch (kind) {
    case DistKind::kRing: return "ring";
    case DistKind::kGrid: return "grid";
    case DistKind::kMixture1d: return "mixture1d";
    case DistKind::kCategorical: return "categorical";
  }
  return "unknown";
}

DistKind parse_dist_kind(const std::string& name) {
  if (name == "ring") return DistKind::kRing;
  if (name == "grid") return DistKind::kGrid;
  if (name == "mixture1d") return DistKind::kMixture1d;
  if (name == "categorical") return DistKind::kCategorical;
  throw std::invalid_argument("unknown distribution kind '" + name + "'");
}

DistSpec DistSpec::ring(std::size_t n_modes, double radius, double sigma) {
  DistSpec s;
  s.kind = DistKind::kRing;
  s.n_modes = n_modes;
  s.radius = radius;
  s.sigma = sigma;
  return s;
}

DistSpec DistSpec::grid(std::size_t rows, std::size_t cols, double spacing, double sigma) {
  DistSpec s;
  s.kind = DistKind::kGrid;
  s.rows = rows;
  s.cols = cols;
  s.spacing = spacing;
  s.sigma = sigma;
  return s;
}

DistSpec DistSpec::mixture_1d(std::vector<double> weights, std::vector<double> means,
                              std::vector<double> sigmas) {
  DistSpec s;
  s.kind = DistKind::kMixture1d;
  s.weights = std::move(weights);
  s.means = std::move(means);
  s.sigmas = std::move(sigmas);
  return s;
}

DistSpec DistSpec::categorical(std::vector<double> probs) {
  DistSpec s;
  s.kind = DistKind::kCategorical;
  s.probs = std::move(probs);
  return s;
}

namespace {

void check_pmf(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + " must be non-empty");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " entries must be finite and >= 0");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + " must sum to 1 (got " +
                                std::to_string(total) + ")");
  }
}

double log_normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t pick(const std::vector<double>& p, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = i;
    acc += p[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace

void DistSpec::validate() const {
  switch (kind) {
    case DistKind::kRing:
      if (n_modes < 1) throw std::invalid_argument("ring needs n_modes >= 1");
      if (!(radius >= 0.0)) throw std::invalid_argument("ring radius must be >= 0");
      if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
      return;
    case DistKind::kGrid:
      if (rows < 1 || cols < 1) throw std::invalid_argument("grid needs rows, cols >= 1");
      if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
      if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
      return;
    case DistKind::kMixture1d:
      check_pmf(weights, "mixture weights");
      if (means.size() != weights.size() || sigmas.size() != weights.size()) {
        throw std::invalid_argument("mixture weights, means and sigmas must have equal length");
      }
      for (double s : sigmas) {
        if (!(s > 0.0)) throw std::invalid_argument("mixture sigmas must be > 0");
      }
      return;
    case DistKind::kCategorical:
      check_pmf(probs, "categorical probabilities");
      return;
  }
}

std::size_t DistSpec::dim() const {
  switch (kind) {
    case DistKind::kRing:
    case DistKind::kGrid:
      return 2;
    case DistKind::kMixture1d:
    case DistKind::kCategorical:
      return 1;
  }
  return 0;
}

std::vector<std::vector<double>> DistSpec::centers() const {
  std::vector<std::vector<double>> out;
  switch (kind) {
    case DistKind::kRing:
      for (std::size_t k = 0; k < n_modes; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(n_modes);
        out.push_back({radius * std::cos(angle), radius * std::sin(angle)});
      }
      break;
    case DistKind::kGrid:
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          out.push_back({(static_cast<double>(c) - 0.5 * static_cast<double>(cols - 1)) * spacing,
                         (static_cast<double>(r) - 0.5 * static_cast<double>(rows - 1)) * spacing});
        }
      }
      break;
    case DistKind::kMixture1d:
      for (double m : means) out.push_back({m});
      break;
    case DistKind::kCategorical:
      for (std::size_t k = 0; k < probs.size(); ++k) out.push_back({static_cast<double>(k)});
      break;
  }
  return out;
}

double DistSpec::component_sigma() const {
  switch (kind) {
    case DistKind::kRing:
    case DistKind::kGrid:
      return sigma;
    case DistKind::kMixture1d:
      return sigmas.empty() ? 0.0 : *std::max_element(sigmas.begin(), sigmas.end());
    case DistKind::kCategorical:
      return 0.0;
  }
  return 0.0;
}

Batch sample_real(const DistSpec& spec, std::size_t n, SplitMix64& rng) {
  spec.validate();
  Batch batch;
  batch.provenance = Provenance::kReal;
  batch.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.dim()));
  const auto centers = spec.centers();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    switch (spec.kind) {
      case DistKind::kRing:
      case DistKind::kGrid: {
        const auto& c = centers[rng.below(centers.size())];
        batch.points(row, 0) = c[0] + spec.sigma * rng.normal();
        batch.points(row, 1) = c[1] + spec.sigma * rng.normal();
        break;
      }
      case DistKind::kMixture1d: {
        const std::size_t k = pick(spec.weights, rng.uniform());
        batch.points(row, 0) = spec.means[k] + spec.sigmas[k] * rng.normal();
        break;
      }
      case DistKind::kCategorical:
        batch.points(row, 0) = static_cast<double>(pick(spec.probs, rng.uniform()));
        break;
    }
  }
  return batch;
}

double log_density(const DistSpec& spec, std::span<const double> x) {
  spec.validate();
  if (x.size() != spec.dim()) throw std::invalid_argument("density: point dimension mismatch");
  std::vector<double> terms;
  switch (spec.kind) {
    case DistKind::kRing:
    case DistKind::kGrid: {
      const auto centers = spec.centers();
      const double log_w = -std::log(static_cast<double>(centers.size()));
      for (const auto& c : centers) {
        terms.push_back(log_w + log_normal_pdf(x[0], c[0], spec.sigma) +
                        log_normal_pdf(x[1], c[1], spec.sigma));
      }
      return log_sum_exp(terms);
    }
    case DistKind::kMixture1d:
      for (std::size_t k = 0; k < spec.weights.size(); ++k) {
        if (spec.weights[k] <= 0.0) continue;
        terms.push_back(std::log(spec.weights[k]) +
                        log_normal_pdf(x[0], spec.means[k], spec.sigmas[k]));
      }
      return log_sum_exp(terms);
    case DistKind::kCategorical: {
      const double idx = x[0];
      if (idx < 0.0 || idx != std::floor(idx) || idx >= static_cast<double>(spec.probs.size())) {
        return -std::numeric_limits<double>::infinity();
      }
      return std::log(spec.probs[static_cast<std::size_t>(idx)]);
    }
  }
  return -std::numeric_limits<double>::infinity();
}

double density(const DistSpec& spec, std::span<const double> x) {
  if (spec.kind == DistKind::kCategorical) {
    if (x.size() != 1) throw std::invalid_argument("density: categorical point must be 1-D");
    const double idx = x[0];
    if (idx < 0.0 || idx != std::floor(idx) || idx >= static_cast<double>(spec.probs.size())) {
      return 0.0;
    }
    return spec.probs[static_cast<std::size_t>(idx)];
  }
  return std::exp(log_density(spec, x));
}

Batch sample_noise(std::size_t dim, std::size_t n, SplitMix64& rng) {
  if (dim < 1) throw std::invalid_argument("sample_noise: dim must be >= 1");
  Batch batch;
  batch.provenance = Provenance::kNoise;
  batch.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < batch.points.size(); ++i) batch.points.data()[i] = rng.normal();
  return batch;
}

Batch interpolate_with(const Batch& real, const Batch& fake, std::span<const double> u) {
  if (real.size() != fake.size() || real.dim() != fake.dim()) {
    throw std::invalid_argument("interpolate: real and fake batches differ in shape");
  }
  if (u.size() != real.size()) throw std::invalid_argument("interpolate: one u per pair");
  Batch out;
  out.provenance = Provenance::kInterpolated;
  out.points.resize(real.points.rows(), real.points.cols());
  for (Eigen::Index i = 0; i < out.points.rows(); ++i) {
    const double w = u[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < out.points.cols(); ++j) {
      out.points(i, j) = w * real.points(i, j) + (1.0 - w) * fake.points(i, j);
    }
  }
  return out;
}

Batch interpolate(const Batch& real, const Batch& fake, SplitMix64& rng) {
  if (real.size() != fake.size()) {
    throw std::invalid_argument("interpolate: real and fake batches differ in size");
  }
  std::vector<double> u(real.size());
  for (double& v : u) v = rng.uniform();
  return interpolate_with(real, fake, u);
}

}  // namespace vgan::data
