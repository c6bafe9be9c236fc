#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbo/core.hpp"
#include "cbo/engine.hpp"
#include "cbo/matrix.hpp"
#include "cbo/objectives.hpp"
#include "cbo/oracle.hpp"

namespace cbo {

// Absolute slack applied to inequalities that hold exactly in real
// arithmetic; covers floating-point accumulation only.
inline constexpr double kStepBoundTol = 1e-10;

// Spread of one component across the ensemble: max - min.
inline double diameter(std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("diameter needs N >= 1");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return *hi - *lo;
}

inline std::vector<double> component_diameters(const Matrix& positions) {
  std::vector<double> out(positions.cols());
  std::vector<double> column(positions.rows());
  for (std::size_t s = 0; s < positions.cols(); ++s) {
    for (std::size_t i = 0; i < positions.rows(); ++i) column[i] = positions(i, s);
    out[s] = diameter(column);
  }
  return out;
}

// Ergodicity coefficient: min over row pairs (i, l) of sum_j min(M_ij, M_lj).
inline double ergodicity(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 0 || m.cols() != n) throw std::invalid_argument("ergodicity needs a square matrix");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = i; l < n; ++l) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += std::min(m(i, j), m(l, j));
      best = std::min(best, sum);
    }
  }
  return best;
}

// V_k: mean squared distance of the particles from x_star.
inline double mean_squared_distance(const Ensemble& ensemble,
                                    std::span<const double> x_star) {
  if (ensemble.dim() != x_star.size())
    throw std::invalid_argument("x_star dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < ensemble.n(); ++i)
    acc += squared_distance(ensemble.positions.row(i), x_star);
  return acc / static_cast<double>(ensemble.n());
}

// Per-component record of the three per-step inequalities: the diameter
// contraction, the ergodicity lower bound, and the consensus-gap bound.
struct StepBoundReport {
  std::vector<double> diam_before;
  std::vector<double> diam_after;
  std::vector<double> erg;
  std::vector<double> eta_max;
  std::vector<bool> contraction_ok;
  std::vector<bool> erg_bound_ok;
  std::vector<double> consensus_gap;
  std::vector<bool> gap_bound_ok;

  bool all_ok() const {
    for (std::size_t s = 0; s < contraction_ok.size(); ++s)
      if (!contraction_ok[s] || !erg_bound_ok[s] || !gap_bound_ok[s]) return false;
    return true;
  }
};

// Checks one realized step: diam(y'_s) <= (1 - erg(M_s)) diam(y_s),
// erg(M_s) >= gamma - 4 max_i |eta_i_s|, and
// |cp_exact_s - cp_noisy_s| <= alpha * err_inf * diam(y_s), each with
// absolute slack kStepBoundTol. All inputs must come from the same step.
inline StepBoundReport step_bound_monitor(const Ensemble& before, const Ensemble& after,
                                          const std::vector<Matrix>& m_list,
                                          const DiffusionDraw& draw, double gamma,
                                          std::span<const double> exact_cp,
                                          std::span<const double> noisy_cp, double alpha,
                                          double err_inf) {
  const std::size_t d = before.dim();
  if (after.dim() != d || after.n() != before.n() || m_list.size() != d ||
      exact_cp.size() != d || noisy_cp.size() != d ||
      !draw.eta.same_shape(before.positions))
    throw std::invalid_argument("step_bound_monitor: shape mismatch");
  if (after.iteration != before.iteration + 1)
    throw std::invalid_argument("step_bound_monitor: ensembles are not consecutive");

  StepBoundReport rep;
  rep.diam_before = component_diameters(before.positions);
  rep.diam_after = component_diameters(after.positions);
  rep.erg.resize(d);
  rep.eta_max.resize(d);
  rep.contraction_ok.resize(d);
  rep.erg_bound_ok.resize(d);
  rep.consensus_gap.resize(d);
  rep.gap_bound_ok.resize(d);
  for (std::size_t s = 0; s < d; ++s) {
    rep.erg[s] = ergodicity(m_list[s]);
    double mx = 0.0;
    for (std::size_t i = 0; i < before.n(); ++i)
      mx = std::max(mx, std::abs(draw.eta(i, s)));
    rep.eta_max[s] = mx;
    rep.contraction_ok[s] =
        rep.diam_after[s] <= (1.0 - rep.erg[s]) * rep.diam_before[s] + kStepBoundTol;
    rep.erg_bound_ok[s] = rep.erg[s] >= gamma - 4.0 * mx - kStepBoundTol;
    rep.consensus_gap[s] = std::abs(exact_cp[s] - noisy_cp[s]);
    rep.gap_bound_ok[s] =
        rep.consensus_gap[s] <= alpha * err_inf * rep.diam_before[s] + kStepBoundTol;
  }
  return rep;
}

struct MaxMomentCheck {
  double empirical_first = 0.0;   // mean of max_i |eta_i|
  double empirical_second = 0.0;  // mean of max_i |eta_i|^2
  double bound_first = 0.0;       // 2 xi sqrt(log(sqrt(2) N))
  double bound_second = 0.0;      // 4 xi^2 log(sqrt(2) N)

  bool within_bounds() const {
    return empirical_first <= bound_first && empirical_second <= bound_second;
  }
};

// Monte Carlo check of the Gaussian max-moment bounds over `trials` draws of
// N i.i.d. N(0, xi^2) variables.
inline MaxMomentCheck gaussian_max_moment_check(std::int64_t n, double xi,
                                                std::int64_t trials,
                                                const SeedSpec& seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  MaxMomentCheck out;
  const double logterm = std::log(std::sqrt(2.0) * static_cast<double>(n));
  out.bound_first = 2.0 * xi * std::sqrt(logterm);
  out.bound_second = 4.0 * xi * xi * logterm;
  double sum1 = 0.0, sum2 = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    RngStream rng(seed.with_particle(static_cast<std::uint64_t>(t)),
                  StreamPurpose::trial);
    double mx = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      mx = std::max(mx, std::abs(xi * rng.normal()));
    sum1 += mx;
    sum2 += mx * mx;
  }
  out.empirical_first = sum1 / static_cast<double>(trials);
  out.empirical_second = sum2 / static_cast<double>(trials);
  return out;
}

enum class MvMode { generic, gaussian };

// Upper bound M_v on E[||E_k||_inf^2]^(1/2): N^(1/2) (t0 + t1 Mf^2)^(1/2) in
// the generic case, 2 (t0 + t1 Mf^2)^(1/2) log(sqrt(2) N)^(1/2) for the
// Gaussian oracle.
inline double mv_bound(double t0, double t1, double mf, std::int64_t n, MvMode mode) {
  if (t0 < 0.0 || t1 < 0.0 || mf < 0.0 || n < 1)
    throw std::invalid_argument("mv_bound: invalid arguments");
  const double base = std::sqrt(t0 + t1 * mf * mf);
  if (mode == MvMode::generic) return std::sqrt(static_cast<double>(n)) * base;
  return 2.0 * base * std::sqrt(std::log(std::sqrt(2.0) * static_cast<double>(n)));
}

struct LaplaceGapReport {
  double lhs = 0.0;          // ||x_alpha - x_star||
  double rhs = 0.0;
  std::int64_t members = 0;  // |I_{k,r}|
  bool case_a = false;       // members > 0
  bool satisfied = false;
};

// Quantitative Laplace principle check on one ensemble, using the consensus
// point computed from exact objective values. The ball radius r determines
// membership; beta, nu, q, f_r are the local growth constants supplied by the
// caller (fitted or derived externally).
inline LaplaceGapReport laplace_gap_bound(const Ensemble& ensemble,
                                          std::span<const double> fvals_exact,
                                          std::span<const double> x_star, double alpha,
                                          double beta, double nu, double q, double f_r,
                                          double r) {
  if (beta == 0.0) throw std::invalid_argument("beta must be nonzero");
  if (!(beta > 0.0) || !(nu > 0.0) || !(q > 0.0) || !(r > 0.0))
    throw std::invalid_argument("beta, nu, q, r must be positive");
  if (ensemble.dim() != x_star.size() || fvals_exact.size() != ensemble.n())
    throw std::invalid_argument("laplace_gap_bound: shape mismatch");

  const ConsensusPoint cp = consensus_point(ensemble.positions, fvals_exact, alpha);
  LaplaceGapReport rep;
  rep.lhs = euclidean_distance(cp.point, x_star);

  double dist_sum = 0.0;
  double f_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ensemble.n(); ++i) {
    const double dist = euclidean_distance(ensemble.positions.row(i), x_star);
    dist_sum += dist;
    f_max = std::max(f_max, fvals_exact[i]);
    if (dist <= r) ++rep.members;
  }

  const double front = std::pow(q + f_r, nu) / beta;
  rep.case_a = rep.members > 0;
  if (rep.case_a) {
    rep.rhs = front + std::exp(-alpha * q) / static_cast<double>(rep.members) * dist_sum;
  } else {
    const double amplification =
        std::exp(-alpha * q + alpha * f_max) / static_cast<double>(ensemble.n());
    rep.rhs = front + amplification * dist_sum;
  }
  rep.satisfied = rep.lhs <= rep.rhs + kStepBoundTol;
  return rep;
}

struct ComplexitySchedule {
  double mu = 0.0;
  double sigma_hat = 0.0;
  std::int64_t k_star = 0;
  double theta = 0.0;
};

// Contraction factor, consensus-accuracy factor and iteration bound of the
// expected mean-squared-distance recursion.
inline ComplexitySchedule complexity_schedule(double eps, double tau, double gamma,
                                              double xi, double v0, std::int64_t n) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (v0 < 0.0) throw std::invalid_argument("V0 must be nonnegative");
  const double one_m_gamma = 1.0 - gamma;
  const double gap = 1.0 - one_m_gamma * one_m_gamma - xi * xi;
  if (!(gap > 0.0))
    throw std::invalid_argument("contraction gap 1-(1-gamma)^2-xi^2 must be positive");

  ComplexitySchedule sched;
  sched.mu = 1.0 - (1.0 - tau) * gap;
  const double g2x2 = gamma * gamma + xi * xi;
  const double first = tau / 4.0 * gap / (g2x2 + std::sqrt(g2x2));
  const double second = std::sqrt(tau / 2.0 * gap / g2x2);
  sched.sigma_hat = std::min(first, second);
  sched.theta = theta(gamma, xi, n);
  const double ratio = v0 / eps;
  sched.k_star = ratio <= 1.0
                     ? 0
                     : static_cast<std::int64_t>(
                           std::ceil(std::log(ratio) / std::log(1.0 / sched.mu)));
  return sched;
}

struct TheoryConstantsReport {
  double gamma_a = 0.0;
  double gamma_b = 0.0;
  double rhs = 0.0;   // of the initial-distribution condition
  double lhs = 0.0;   // (1 - eps_margin) * E[exp(-alpha f(x_0))]
  bool applicable = false;  // theta < 1
  bool condition_holds = false;
};

// Evaluates Gamma_A, Gamma_B and the initial-distribution condition
// (1-eps) E[e^{-alpha f(x_0)}] >= alpha e^{-alpha f*} (Gamma_A / (1-e^{-2(1-theta)})
// + Gamma_B / (1-e^{-(1-theta)})). MH and Mg are the user-supplied Hessian and
// consensus-gradient bounds; theta_value comes from validate_params.
inline TheoryConstantsReport theory_constants(double mh, double mg, double gamma,
                                              double xi, double alpha, double mv,
                                              double d0, double f_star,
                                              double e_exp_f0, double eps_margin,
                                              double theta_value) {
  TheoryConstantsReport rep;
  const double one_m_gamma = 1.0 - gamma;
  rep.gamma_a = mh * std::sqrt(1.0 + one_m_gamma * one_m_gamma + xi * xi) *
                std::sqrt(gamma * gamma + xi * xi) * d0;
  rep.gamma_b = mg * (gamma * alpha * mv + xi) * std::sqrt(d0);
  rep.applicable = theta_value < 1.0;
  rep.lhs = (1.0 - eps_margin) * e_exp_f0;
  if (rep.applicable) {
    const double decay = 1.0 - theta_value;
    const double denom_a = 1.0 - std::exp(-2.0 * decay);
    const double denom_b = 1.0 - std::exp(-decay);
    const double scale = alpha * std::exp(-alpha * f_star);
    rep.rhs = scale * (rep.gamma_a / denom_a + rep.gamma_b / denom_b);
    rep.condition_holds = rep.lhs >= rep.rhs;
  }
  return rep;
}

// Monte Carlo estimate of D_0 = sum_s E[diam(y^s_0)^2] over fresh initial
// ensembles.
inline double estimate_d0(const InitSpec& init, const CboParams& params,
                          std::int64_t trials, const SeedSpec& seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  double acc = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const Ensemble e =
        init_ensemble(init, params, seed.with_run(static_cast<std::uint64_t>(t)));
    for (double dm : component_diameters(e.positions)) acc += dm * dm;
  }
  return acc / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------
// Randomized per-step property suite shared by the CLI `check` command and
// the acceptance tests.

struct StepSuiteConfig {
  std::int64_t steps = 1000;
  std::uint64_t master_seed = 2024;
  std::int64_t max_n = 16;
  std::int64_t max_d = 4;
  std::vector<double> gammas = {0.1, 0.5, 1.0};
  std::vector<double> xis = {0.0, 0.05, 0.1};
  std::vector<double> alphas = {0.1, 1.0, 10.0};
  std::vector<double> sigma0s = {0.0, 0.1, 1.0};
  std::vector<double> sigma1s = {0.0, 0.1};
  double equivalence_tol = 1e-12;
};

struct StepSuiteResult {
  std::int64_t steps = 0;
  std::int64_t contraction_failures = 0;
  std::int64_t erg_bound_failures = 0;
  std::int64_t gap_bound_failures = 0;
  std::int64_t row_sum_failures = 0;
  std::int64_t equivalence_failures = 0;
  double max_row_sum_error = 0.0;
  double max_equivalence_error = 0.0;

  bool all_ok() const {
    return contraction_failures == 0 && erg_bound_failures == 0 &&
           gap_bound_failures == 0 && row_sum_failures == 0 &&
           equivalence_failures == 0;
  }
};

// For `steps` random configurations: builds an ensemble, evaluates exact and
// Gaussian-noised objective values, performs one update, and checks the
// per-step inequalities plus row-stochasticity and the matrix/particle
// equivalence of the transition form.
inline StepSuiteResult run_step_lemma_suite(const StepSuiteConfig& cfg) {
  StepSuiteResult res;
  res.steps = cfg.steps;
  RngStream pick(SeedSpec{cfg.master_seed, 0, 0, 0, 0}, StreamPurpose::trial);

  for (std::int64_t t = 0; t < cfg.steps; ++t) {
    const auto n = static_cast<std::size_t>(2 + pick.next_below(cfg.max_n - 1));
    const auto d = static_cast<std::size_t>(1 + pick.next_below(cfg.max_d));
    CboParams params;
    params.gamma = cfg.gammas[pick.next_below(cfg.gammas.size())];
    params.xi = cfg.xis[pick.next_below(cfg.xis.size())];
    params.alpha = cfg.alphas[pick.next_below(cfg.alphas.size())];
    params.n_particles = static_cast<std::int64_t>(n);
    params.dim = static_cast<std::int64_t>(d);
    const NoiseSpec noise{cfg.sigma0s[pick.next_below(cfg.sigma0s.size())],
                          cfg.sigma1s[pick.next_below(cfg.sigma1s.size())]};

    const SeedSpec trial_seed{cfg.master_seed, static_cast<std::uint64_t>(t) + 1,
                              0, 0, 0};
    Ensemble before;
    before.positions = Matrix(n, d);
    before.iteration = 0;
    {
      RngStream rng(trial_seed, StreamPurpose::init);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < d; ++s)
          before.positions(i, s) = rng.uniform(-5.0, 5.0);
    }

    std::vector<double> fexact(n), fhat(n);
    double err_inf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fexact[i] = rastrigin(before.positions.row(i));
      fhat[i] =
          gaussian_noisy_oracle(fexact[i], noise, trial_seed.with_particle(i));
      err_inf = std::max(err_inf, oracle_error(fexact[i], fhat[i]));
    }

    const ConsensusPoint noisy_cp =
        consensus_point(before.positions, fhat, params.alpha);
    const ConsensusPoint exact_cp =
        consensus_point(before.positions, fexact, params.alpha);
    const DiffusionDraw draw = sample_diffusion(params, trial_seed);
    const Ensemble after = step(before, noisy_cp, params.gamma, draw);

    std::vector<Matrix> m_list;
    m_list.reserve(d);
    for (std::size_t s = 0; s < d; ++s)
      m_list.push_back(transition_matrix(noisy_cp.weights, params.gamma, draw, s));

    // Row sums and matrix/particle equivalence.
    for (std::size_t s = 0; s < d; ++s) {
      bool row_ok = true;
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += m_list[s](i, j);
        const double err = std::abs(sum - 1.0);
        res.max_row_sum_error = std::max(res.max_row_sum_error, err);
        if (err > 1e-12) row_ok = false;
      }
      if (!row_ok) ++res.row_sum_failures;

      bool equiv_ok = true;
      for (std::size_t i = 0; i < n; ++i) {
        double my = 0.0;
        for (std::size_t j = 0; j < n; ++j) my += m_list[s](i, j) * before.positions(j, s);
        const double err = std::abs(my - after.positions(i, s));
        res.max_equivalence_error = std::max(res.max_equivalence_error, err);
        if (err > cfg.equivalence_tol) equiv_ok = false;
      }
      if (!equiv_ok) ++res.equivalence_failures;
    }

    const StepBoundReport rep =
        step_bound_monitor(before, after, m_list, draw, params.gamma, exact_cp.point,
                           noisy_cp.point, params.alpha, err_inf);
    for (std::size_t s = 0; s < d; ++s) {
      if (!rep.contraction_ok[s]) ++res.contraction_failures;
      if (!rep.erg_bound_ok[s]) ++res.erg_bound_failures;
      if (!rep.gap_bound_ok[s]) ++res.gap_bound_failures;
    }
  }
  return res;
}

}  // namespace cbo
