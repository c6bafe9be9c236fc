#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "cbo/objectives.hpp"
#include "cbo/rng.hpp"

namespace cbo {

// Gaussian oracle noise levels: fhat = f + w0 + w1*f with w0 ~ N(0, sigma0^2)
// and w1 ~ N(0, sigma1^2). sigma0 = sigma1 = 0 reproduces the exact oracle.
struct NoiseSpec {
  double sigma0 = 0.0;
  double sigma1 = 0.0;

  bool is_exact() const { return sigma0 == 0.0 && sigma1 == 0.0; }
};

// Finite-sum subsampling: each call averages ceil(ell * M) component losses
// over a fresh uniform subset drawn without replacement.
struct SubsampleSpec {
  double ell = 1.0;
  bool per_particle_fresh = true;
};

struct EvalRecord {
  double value = 0.0;                  // fhat
  std::optional<double> exact_value;   // f, when tracked for diagnostics
  std::int64_t component_evals = 1;    // f_j evaluations charged to this call
};

inline void validate_noise(const NoiseSpec& spec) {
  if (spec.sigma0 < 0.0 || spec.sigma1 < 0.0)
    throw std::invalid_argument("noise standard deviations must be nonnegative");
}

inline void validate_subsample(const SubsampleSpec& spec) {
  if (!(spec.ell > 0.0) || spec.ell > 1.0)
    throw std::invalid_argument("sampling fraction ell must lie in (0, 1]");
}

inline std::int64_t subsample_size(double ell, std::size_t m) {
  const auto n = static_cast<std::int64_t>(
      std::ceil(ell * static_cast<double>(m)));
  return std::min<std::int64_t>(std::max<std::int64_t>(n, 1),
                                static_cast<std::int64_t>(m));
}

// Perturbs an exact value with the two-component Gaussian noise model,
// drawing (w0, w1) from the per-call stream.
inline double gaussian_noisy_oracle(double f_value, const NoiseSpec& spec,
                                    const SeedSpec& seed) {
  validate_noise(spec);
  if (spec.is_exact()) return f_value;
  RngStream rng(seed, StreamPurpose::oracle);
  const double w0 = spec.sigma0 * rng.normal();
  const double w1 = spec.sigma1 * rng.normal();
  return f_value + w0 + w1 * f_value;
}

// Unbiased finite-sum estimate from a fresh uniform subset.
inline EvalRecord subsample_oracle(std::span<const double> x, const Dataset& data,
                                   const SubsampleSpec& spec, const SeedSpec& seed) {
  validate_subsample(spec);
  validate_dataset(data);
  const std::int64_t n = subsample_size(spec.ell, data.size());
  EvalRecord rec;
  rec.component_evals = n;
  if (static_cast<std::size_t>(n) == data.size()) {
    rec.value = finite_sum_loss(x, data);
    return rec;
  }
  RngStream rng(seed, StreamPurpose::oracle);
  const auto subset = sample_without_replacement(data.size(),
                                                 static_cast<std::uint64_t>(n), rng);
  rec.value = finite_sum_loss(x, data, &subset);
  return rec;
}

// Realized oracle error |f - fhat| for one evaluation.
inline double oracle_error(double exact, double noisy) {
  return std::abs(exact - noisy);
}

// Stochastic oracle used by the run loop: exact objective, Gaussian-noised
// objective, or subsampled finite sum. Stateless given (input, seed), so
// per-particle evaluations can run in any order.
class Oracle {
 public:
  static Oracle exact(Objective f) {
    Oracle o;
    o.kind_ = Kind::gaussian;
    o.objective_ = std::move(f);
    o.noise_ = NoiseSpec{};
    return o;
  }

  static Oracle gaussian(Objective f, NoiseSpec noise) {
    validate_noise(noise);
    Oracle o;
    o.kind_ = Kind::gaussian;
    o.objective_ = std::move(f);
    o.noise_ = noise;
    return o;
  }

  static Oracle subsample(const Dataset& data, SubsampleSpec spec) {
    validate_subsample(spec);
    validate_dataset(data);
    Oracle o;
    o.kind_ = Kind::subsample;
    o.dataset_ = &data;
    o.subsample_ = spec;
    return o;
  }

  // f_j evaluations charged per oracle call: ceil(ell*M) when subsampling,
  // M for the exact finite sum, 1 otherwise.
  std::int64_t component_evals_per_call() const {
    if (kind_ == Kind::subsample)
      return subsample_size(subsample_.ell, dataset_->size());
    return 1;
  }

  // want_exact additionally reports the exact value; for the subsampled
  // oracle this costs a full pass over the dataset and is not charged to
  // component_evals (diagnostics only).
  EvalRecord evaluate(std::span<const double> x, const SeedSpec& seed,
                      bool want_exact = false) const {
    if (kind_ == Kind::subsample) {
      EvalRecord rec = subsample_oracle(x, *dataset_, subsample_, seed);
      if (want_exact) rec.exact_value = finite_sum_loss(x, *dataset_);
      return rec;
    }
    EvalRecord rec;
    const double f = objective_(x);
    rec.value = gaussian_noisy_oracle(f, noise_, seed);
    rec.component_evals = 1;
    if (want_exact || noise_.is_exact()) rec.exact_value = f;
    return rec;
  }

  double exact_value(std::span<const double> x) const {
    if (kind_ == Kind::subsample) return finite_sum_loss(x, *dataset_);
    return objective_(x);
  }

 private:
  enum class Kind { gaussian, subsample };
  Kind kind_ = Kind::gaussian;
  Objective objective_;
  NoiseSpec noise_;
  const Dataset* dataset_ = nullptr;
  SubsampleSpec subsample_;
};

}  // namespace cbo
