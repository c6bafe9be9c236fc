#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/core.hpp"
#include "cbo/matrix.hpp"
#include "cbo/oracle.hpp"
#include "cbo/rng.hpp"

namespace cbo {

// Gibbs-weighted average of the particle positions.
struct ConsensusPoint {
  std::vector<double> point;    // d entries
  std::vector<double> weights;  // N entries, positive, sum to 1
};

// One iteration's diffusion multipliers eta[i][s] ~ N(0, xi^2). In shared
// mode all particles see the same row.
struct DiffusionDraw {
  Matrix eta;  // N x d
  NoiseMode mode = NoiseMode::per_particle;
};

enum class Termination { max_iter, consensus_tol };

inline const char* to_string(Termination t) {
  return t == Termination::max_iter ? "max_iter" : "consensus_tol";
}

struct IterationStats {
  std::int64_t iter = 0;
  double stopping_metric = 0.0;
  std::vector<double> diam;  // per component
  double v_k = std::numeric_limits<double>::quiet_NaN();  // needs x_star
  double cost_so_far = 0.0;
};

struct CostLedger {
  std::int64_t iterations = 0;
  std::int64_t oracle_calls = 0;
  std::int64_t component_evals = 0;
  double cost = 0.0;  // iterations * d * (component_evals_per_call + 2)
};

struct RunRecord {
  Ensemble final_ensemble;
  ConsensusPoint final_consensus;
  std::int64_t iterations = 0;
  Termination termination = Termination::max_iter;
  std::vector<IterationStats> diagnostics;
  CostLedger ledger;
};

// Thrown when a particle coordinate leaves the finite range mid-run (possible
// for strongly expanding parameter choices).
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::int64_t iteration)
      : std::runtime_error("non-finite particle position at iteration " +
                           std::to_string(iteration)),
        iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

// Gibbs weights and weighted average from noisy values. The weights are
// computed as exp(-alpha*(fhat_i - min_j fhat_j)) / sum(...): shifting by the
// minimum is exact algebra and keeps the largest exponent at zero, which is
// required for alpha of order 1e4.
inline ConsensusPoint consensus_point(const Matrix& positions,
                                      std::span<const double> fhat, double alpha) {
  const std::size_t n = positions.rows();
  const std::size_t d = positions.cols();
  if (n == 0) throw std::invalid_argument("consensus_point needs N >= 1");
  if (fhat.size() != n)
    throw std::invalid_argument("fhat must have one entry per particle");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(fhat[i]))
      throw std::invalid_argument("non-finite oracle value at particle " +
                                  std::to_string(i));

  const double fmin = *std::min_element(fhat.begin(), fhat.end());
  ConsensusPoint cp;
  cp.weights.resize(n);
  cp.point.assign(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(-alpha * (fhat[i] - fmin));
    cp.weights[i] = w;
    total += w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    cp.weights[i] /= total;
    const auto row = positions.row(i);
    for (std::size_t s = 0; s < d; ++s) cp.point[s] += cp.weights[i] * row[s];
  }
  return cp;
}

// N x d Gaussian diffusion multipliers. Per-particle mode uses one stream per
// particle; shared mode draws a single row and broadcasts it.
inline DiffusionDraw sample_diffusion(const CboParams& params, const SeedSpec& seed) {
  const auto n = static_cast<std::size_t>(params.n_particles);
  const auto d = static_cast<std::size_t>(params.dim);
  DiffusionDraw draw;
  draw.mode = params.noise_mode;
  draw.eta = Matrix(n, d);
  if (params.xi == 0.0) return draw;
  if (params.noise_mode == NoiseMode::shared) {
    RngStream rng(seed.with_particle(0), StreamPurpose::diffusion);
    std::vector<double> row(d);
    for (std::size_t s = 0; s < d; ++s) row[s] = params.xi * rng.normal();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t s = 0; s < d; ++s) draw.eta(i, s) = row[s];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      RngStream rng(seed.with_particle(i), StreamPurpose::diffusion);
      for (std::size_t s = 0; s < d; ++s) draw.eta(i, s) = params.xi * rng.normal();
    }
  }
  return draw;
}

// One discrete update: x'[i][s] = x[i][s] + (gamma + eta[i][s]) *
// (cp[s] - x[i][s]), evaluated in the factored form
// (1 - gamma - eta) * x + (gamma + eta) * cp, which mirrors the transition
// matrix rows and is exact for full drift. Increments the iteration counter.
inline Ensemble step(const Ensemble& ensemble, const ConsensusPoint& cp, double gamma,
                     const DiffusionDraw& draw) {
  const std::size_t n = ensemble.n();
  const std::size_t d = ensemble.dim();
  if (cp.point.size() != d || !ensemble.positions.same_shape(draw.eta))
    throw std::invalid_argument("step: shape mismatch");
  Ensemble out;
  out.positions = Matrix(n, d);
  out.iteration = ensemble.iteration + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ensemble.positions.row(i);
    auto y = out.positions.row(i);
    for (std::size_t s = 0; s < d; ++s) {
      const double g = gamma + draw.eta(i, s);
      y[s] = (1.0 - g) * x[s] + g * cp.point[s];
    }
  }
  return out;
}

// Row-stochastic matrix M of the component-s update y' = M y: diagonal
// 1 - gamma - eta_i + (gamma + eta_i) v_i, off-diagonal (gamma + eta_i) v_j.
inline Matrix transition_matrix(std::span<const double> weights, double gamma,
                                const DiffusionDraw& draw, std::size_t s) {
  const std::size_t n = weights.size();
  if (draw.eta.rows() != n || s >= draw.eta.cols())
    throw std::invalid_argument("transition_matrix: shape mismatch");
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-6)
    throw std::invalid_argument("transition_matrix: weights must sum to 1");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gamma + draw.eta(i, s);
    for (std::size_t j = 0; j < n; ++j) m(i, j) = g * weights[j];
    m(i, i) += 1.0 - g;
  }
  return m;
}

// Mean Euclidean distance of the particles from the ensemble average.
inline double stopping_metric(const Ensemble& ensemble) {
  const std::size_t n = ensemble.n();
  const std::size_t d = ensemble.dim();
  if (n == 0) throw std::invalid_argument("stopping_metric needs N >= 1");
  std::vector<double> avg(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = ensemble.positions.row(i);
    for (std::size_t s = 0; s < d; ++s) avg[s] += row[s];
  }
  for (auto& v : avg) v /= static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += euclidean_distance(ensemble.positions.row(i), avg);
  return sum / static_cast<double>(n);
}

struct DiagnosticsOptions {
  bool per_iteration = false;
  std::vector<double> x_star;  // enables the V_k column when nonempty
};

// Runs the CBO loop: per iteration, evaluate the oracle at every particle
// with fresh per-particle randomness, form the consensus point, draw the
// diffusion multipliers, and update all positions. Stops after max_iter
// iterations or, when consensus_tol > 0, as soon as the mean distance to the
// ensemble average falls below the tolerance.
//
// Oracle evaluations run in particle order and the consensus reduction is
// sequential over i = 1..N, so records are bit-reproducible for a given
// (master_seed, run) regardless of the host's thread count.
inline RunRecord run(const CboParams& params, const Oracle& oracle,
                     const InitSpec& init, const SeedSpec& seed,
                     const DiagnosticsOptions& diag = {}) {
  {
    const auto report = validate_params(params);
    if (!report.ok())
      throw std::invalid_argument("invalid parameters: " + report.errors.front());
  }
  const auto n = static_cast<std::size_t>(params.n_particles);
  const auto d = static_cast<std::size_t>(params.dim);
  const std::int64_t evals_per_call = oracle.component_evals_per_call();
  const double cost_per_iter =
      static_cast<double>(d) * static_cast<double>(evals_per_call + 2);

  RunRecord rec;
  Ensemble ensemble = init_ensemble(init, params, seed);
  std::vector<double> fhat(n);

  auto record_stats = [&](const Ensemble& e, double cost_so_far) {
    if (!diag.per_iteration) return;
    IterationStats st;
    st.iter = e.iteration;
    st.stopping_metric = stopping_metric(e);
    st.diam.resize(d);
    for (std::size_t s = 0; s < d; ++s) {
      double lo = e.positions(0, s), hi = lo;
      for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, e.positions(i, s));
        hi = std::max(hi, e.positions(i, s));
      }
      st.diam[s] = hi - lo;
    }
    if (!diag.x_star.empty()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += squared_distance(e.positions.row(i), diag.x_star);
      st.v_k = acc / static_cast<double>(n);
    }
    st.cost_so_far = cost_so_far;
    rec.diagnostics.push_back(std::move(st));
  };

  record_stats(ensemble, 0.0);

  auto evaluate_all = [&](std::int64_t k) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto call_seed = seed.with_particle(i).with_iteration(
          static_cast<std::uint64_t>(k));
      fhat[i] = oracle.evaluate(ensemble.positions.row(i), call_seed).value;
      if (!std::isfinite(fhat[i])) throw NonFiniteError(k);
    }
    rec.ledger.oracle_calls += static_cast<std::int64_t>(n);
    rec.ledger.component_evals += static_cast<std::int64_t>(n) * evals_per_call;
  };

  std::optional<ConsensusPoint> last_cp;
  rec.termination = Termination::max_iter;
  std::int64_t k = 0;
  while (k < params.max_iter) {
    evaluate_all(k);
    last_cp = consensus_point(ensemble.positions, fhat, params.alpha);
    const DiffusionDraw draw = sample_diffusion(
        params, seed.with_iteration(static_cast<std::uint64_t>(k)));
    ensemble = step(ensemble, *last_cp, params.gamma, draw);
    ++k;
    if (!ensemble.positions.all_finite()) throw NonFiniteError(ensemble.iteration);
    record_stats(ensemble, static_cast<double>(k) * cost_per_iter);
    if (params.consensus_tol > 0.0 &&
        stopping_metric(ensemble) <= params.consensus_tol) {
      rec.termination = Termination::consensus_tol;
      break;
    }
  }
  if (!last_cp) {
    // Degenerate max_iter = 0 run: report the consensus point of the initial
    // ensemble so the error metric is still defined.
    evaluate_all(0);
    last_cp = consensus_point(ensemble.positions, fhat, params.alpha);
  }

  rec.iterations = k;
  rec.ledger.iterations = k;
  rec.ledger.cost = static_cast<double>(k) * cost_per_iter;
  rec.final_ensemble = std::move(ensemble);
  rec.final_consensus = std::move(*last_cp);
  return rec;
}

}  // namespace cbo
