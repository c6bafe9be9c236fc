#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbo/dataset.hpp"

namespace cbo {

using Objective = std::function<double(std::span<const double>)>;

// Rastrigin benchmark with the 10*d offset, so the global minimum value is 0
// at the origin in every dimension.
inline double rastrigin(std::span<const double> x) {
  double sum = 10.0 * static_cast<double>(x.size());
  for (double v : x)
    sum += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return sum;
}

// f(x) = rastrigin(W x) with W the 2-d rotation by `angle`; a non-separable
// variant of the benchmark.
inline double rotated_rastrigin(std::span<const double> x, double angle) {
  if (x.size() != 2)
    throw std::invalid_argument("rotated_rastrigin requires dimension 2");
  const double c = std::cos(angle), s = std::sin(angle);
  const double w[2] = {c * x[0] - s * x[1], s * x[0] + c * x[1]};
  return rastrigin(std::span<const double>(w, 2));
}

// Logistic sigmoid evaluated without overflow for large |t|.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Squared loss of the sigmoid classifier on one instance.
inline double component_loss(std::span<const double> x, const Dataset& data,
                             std::size_t j) {
  double dot = 0.0;
  const auto row = data.features.row(j);
  for (std::size_t s = 0; s < x.size(); ++s) dot += x[s] * row[s];
  const double diff = static_cast<double>(data.labels[j]) - sigmoid(dot);
  return diff * diff;
}

// Mean component loss over `subset`, or over the whole dataset when the
// subset is empty-by-omission (nullptr).
inline double finite_sum_loss(std::span<const double> x, const Dataset& data,
                              const std::vector<std::uint32_t>* subset = nullptr) {
  validate_dataset(data);
  if (x.size() != data.dim())
    throw std::invalid_argument("parameter vector dimension mismatch");
  if (subset != nullptr) {
    if (subset->empty()) throw std::invalid_argument("subset must be nonempty");
    double sum = 0.0;
    for (std::uint32_t j : *subset) {
      if (j >= data.size()) throw std::invalid_argument("subset index out of range");
      sum += component_loss(x, data, j);
    }
    return sum / static_cast<double>(subset->size());
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) sum += component_loss(x, data, j);
  return sum / static_cast<double>(data.size());
}

enum class ObjectiveKind { rastrigin, rotated_rastrigin, finite_sum };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::rastrigin;
  double angle = std::numbers::pi / 3.0;  // rotated case
  const Dataset* dataset = nullptr;       // finite_sum case
};

inline Objective make_objective(const ObjectiveSpec& spec, std::int64_t dim) {
  switch (spec.kind) {
    case ObjectiveKind::rastrigin:
      return [](std::span<const double> x) { return rastrigin(x); };
    case ObjectiveKind::rotated_rastrigin:
      if (dim != 2)
        throw std::invalid_argument("rotated_rastrigin requires dim = 2");
      return [angle = spec.angle](std::span<const double> x) {
        return rotated_rastrigin(x, angle);
      };
    case ObjectiveKind::finite_sum:
      if (spec.dataset == nullptr)
        throw std::invalid_argument("finite_sum objective needs a dataset");
      if (static_cast<std::size_t>(dim) != spec.dataset->dim())
        throw std::invalid_argument("dataset dimension mismatch");
      return [data = spec.dataset](std::span<const double> x) {
        return finite_sum_loss(x, *data);
      };
  }
  throw std::logic_error("unknown objective kind");
}

}  // namespace cbo
