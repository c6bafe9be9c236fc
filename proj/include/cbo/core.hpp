#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/matrix.hpp"
#include "cbo/rng.hpp"

namespace cbo {

enum class NoiseMode { per_particle, shared };

// Algorithm parameters of the discrete CBO update.
struct CboParams {
  double gamma = 0.1;          // drift, in (0, 1]
  double xi = 0.0056;          // diffusion standard deviation, >= 0
  double alpha = 1e4;          // Gibbs weight, > 0
  std::int64_t n_particles = 100;
  std::int64_t dim = 1;
  NoiseMode noise_mode = NoiseMode::per_particle;
  std::int64_t max_iter = 1000;
  double consensus_tol = 0.0;  // 0 disables the tolerance-based stop
};

enum class InitKind { uniform_box, gaussian };

struct InitSpec {
  InitKind kind = InitKind::uniform_box;
  std::vector<double> lower;  // uniform_box, one entry per coordinate
  std::vector<double> upper;
  std::vector<double> mean;   // gaussian
  std::vector<double> stddev;

  static InitSpec box(double lo, double hi, std::size_t d) {
    InitSpec s;
    s.kind = InitKind::uniform_box;
    s.lower.assign(d, lo);
    s.upper.assign(d, hi);
    return s;
  }
};

// Particle positions at iteration k; one row per particle.
struct Ensemble {
  Matrix positions;
  std::int64_t iteration = 0;

  std::size_t n() const { return positions.rows(); }
  std::size_t dim() const { return positions.cols(); }
};

// Contraction constant of the diameter recursion.
inline double theta(double gamma, double xi, std::int64_t n_particles) {
  return 1.0 - gamma +
         8.0 * xi *
             std::sqrt(std::log(std::sqrt(2.0) * static_cast<double>(n_particles)));
}

struct ValidationReport {
  double theta = 0.0;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
  bool has_warnings() const { return !warnings.empty(); }
};

// Parameter sanity report. Out-of-range values are reported, not thrown;
// theta >= 1 is a warning only, since such configurations are often observed
// to converge in practice.
inline ValidationReport validate_params(const CboParams& p) {
  ValidationReport r;
  if (!(p.gamma > 0.0) || p.gamma > 1.0)
    r.errors.push_back("gamma must lie in (0, 1], got " + std::to_string(p.gamma));
  if (p.xi < 0.0)
    r.errors.push_back("xi must be nonnegative, got " + std::to_string(p.xi));
  if (!(p.alpha > 0.0))
    r.errors.push_back("alpha must be positive, got " + std::to_string(p.alpha));
  if (p.n_particles < 1) r.errors.push_back("n_particles must be >= 1");
  if (p.dim < 1) r.errors.push_back("dim must be >= 1");
  if (p.max_iter < 0) r.errors.push_back("max_iter must be >= 0");
  if (p.consensus_tol < 0.0) r.errors.push_back("consensus_tol must be >= 0");
  if (p.n_particles >= 1 && p.gamma > 0.0 && p.xi >= 0.0) {
    r.theta = theta(p.gamma, p.xi, p.n_particles);
    if (r.theta >= 1.0)
      r.warnings.push_back("theta = " + std::to_string(r.theta) +
                           " >= 1: consensus is not guaranteed by the contraction "
                           "condition (runs may still converge in practice)");
  }
  return r;
}

inline void validate_init(const InitSpec& init, std::int64_t dim) {
  const auto d = static_cast<std::size_t>(dim);
  if (init.kind == InitKind::uniform_box) {
    if (init.lower.size() != d || init.upper.size() != d)
      throw std::invalid_argument("init box bounds must have one entry per coordinate");
    for (std::size_t s = 0; s < d; ++s)
      if (!(init.lower[s] < init.upper[s]))
        throw std::invalid_argument("init box is degenerate: lower[" +
                                    std::to_string(s) + "] >= upper[" +
                                    std::to_string(s) + "]");
  } else {
    if (init.mean.size() != d || init.stddev.size() != d)
      throw std::invalid_argument("init mean/stddev must have one entry per coordinate");
    for (std::size_t s = 0; s < d; ++s)
      if (init.stddev[s] < 0.0)
        throw std::invalid_argument("init stddev must be nonnegative");
  }
}

// Draws the N x d initial ensemble i.i.d. from the configured law.
// One stream per particle, keyed by the seed's run index.
inline Ensemble init_ensemble(const InitSpec& init, const CboParams& params,
                              const SeedSpec& seed) {
  if (params.n_particles < 1 || params.dim < 1)
    throw std::invalid_argument("n_particles and dim must be >= 1");
  validate_init(init, params.dim);

  const auto n = static_cast<std::size_t>(params.n_particles);
  const auto d = static_cast<std::size_t>(params.dim);
  Ensemble e;
  e.positions = Matrix(n, d);
  e.iteration = 0;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed.with_particle(i).with_iteration(0), StreamPurpose::init);
    auto row = e.positions.row(i);
    for (std::size_t s = 0; s < d; ++s) {
      row[s] = init.kind == InitKind::uniform_box
                   ? rng.uniform(init.lower[s], init.upper[s])
                   : rng.normal(init.mean[s], init.stddev[s]);
    }
  }
  return e;
}

}  // namespace cbo
