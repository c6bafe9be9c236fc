#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cbo/matrix.hpp"
#include "cbo/rng.hpp"

namespace cbo {

// Binary classification dataset: M feature rows with labels in {0, 1}.
struct Dataset {
  Matrix features;              // M x d
  std::vector<int> labels;      // M entries, each 0 or 1
  std::string name;
  std::vector<double> oracle_weights;  // generating hyperplane, synthetic only

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

inline void validate_dataset(const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  if (data.labels.size() != data.size())
    throw std::invalid_argument("dataset labels/features size mismatch");
  if (!data.features.all_finite())
    throw std::invalid_argument("dataset contains non-finite features");
  for (int b : data.labels)
    if (b != 0 && b != 1) throw std::invalid_argument("dataset labels must be 0 or 1");
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) {
    // trim surrounding whitespace and CR
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace detail

// Loads a delimited text file with numeric features and one label column.
// The label column is selected by 0-based index or, when the file has a
// header row, by name. Non-numeric labels (e.g. class names) are mapped to
// {0, 1} by lexicographic order; more than two classes is an error.
inline Dataset load_dataset(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
      lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error("dataset file is empty: " + path);

  const auto first = detail::split_fields(lines.front(), ',');
  const std::size_t n_cols = first.size();
  if (n_cols < 2) throw std::runtime_error("dataset needs at least two columns");

  // Header detection: a first row where not every field parses as a number.
  std::size_t n_numeric = 0;
  double tmp;
  for (const auto& f : first)
    if (detail::parse_double(f, tmp)) ++n_numeric;
  const bool has_header = n_numeric < n_cols;

  std::size_t label_idx = 0;
  bool idx_ok = false;
  {
    double as_num;
    if (detail::parse_double(label_column, as_num) &&
        as_num == std::floor(as_num) && as_num >= 0 && as_num < double(n_cols)) {
      label_idx = static_cast<std::size_t>(as_num);
      idx_ok = true;
    } else if (has_header) {
      for (std::size_t j = 0; j < n_cols; ++j)
        if (first[j] == label_column) {
          label_idx = j;
          idx_ok = true;
          break;
        }
    }
  }
  if (!idx_ok)
    throw std::runtime_error("label column '" + label_column + "' not found");

  const std::size_t first_row = has_header ? 1 : 0;
  const std::size_t m = lines.size() - first_row;
  if (m == 0) throw std::runtime_error("dataset has a header but no rows");
  const std::size_t d = n_cols - 1;

  Dataset data;
  data.features = Matrix(m, d);
  data.labels.resize(m);
  data.name = path;

  std::vector<std::string> raw_labels(m);
  for (std::size_t r = 0; r < m; ++r) {
    const auto fields = detail::split_fields(lines[first_row + r], ',');
    if (fields.size() != n_cols)
      throw std::runtime_error("row " + std::to_string(r + first_row + 1) +
                               " has " + std::to_string(fields.size()) +
                               " columns, expected " + std::to_string(n_cols));
    std::size_t jj = 0;
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (j == label_idx) {
        raw_labels[r] = fields[j];
        continue;
      }
      double v;
      if (!detail::parse_double(fields[j], v))
        throw std::runtime_error("non-numeric feature '" + fields[j] + "' at row " +
                                 std::to_string(r + first_row + 1));
      data.features(r, jj++) = v;
    }
  }

  // Map distinct label strings to {0, 1} lexicographically.
  std::map<std::string, int> classes;
  for (const auto& s : raw_labels) classes.emplace(s, 0);
  if (classes.size() != 2)
    throw std::runtime_error("expected exactly 2 label classes, found " +
                             std::to_string(classes.size()));
  int next = 0;
  for (auto& [key, value] : classes) value = next++;
  for (std::size_t r = 0; r < m; ++r) data.labels[r] = classes[raw_labels[r]];

  validate_dataset(data);
  return data;
}

// Disjoint uniform random split into train_size / (M - train_size) rows.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                                 std::int64_t train_size,
                                                 const SeedSpec& seed) {
  validate_dataset(data);
  const auto m = static_cast<std::int64_t>(data.size());
  if (train_size < 1 || train_size >= m)
    throw std::invalid_argument("train_size must lie in [1, M)");

  RngStream rng(seed, StreamPurpose::split);
  std::vector<std::uint32_t> perm(data.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j + 1 < perm.size(); ++j) {
    const std::size_t pick = j + rng.next_below(perm.size() - j);
    std::swap(perm[j], perm[pick]);
  }

  const std::size_t d = data.dim();
  auto take = [&](std::size_t begin, std::size_t count, const std::string& tag) {
    Dataset out;
    out.features = Matrix(count, d);
    out.labels.resize(count);
    out.name = data.name + tag;
    out.oracle_weights = data.oracle_weights;
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t src = perm[begin + r];
      for (std::size_t j = 0; j < d; ++j) out.features(r, j) = data.features(src, j);
      out.labels[r] = data.labels[src];
    }
    return out;
  };
  const auto ts = static_cast<std::size_t>(train_size);
  return {take(0, ts, "/train"), take(ts, data.size() - ts, "/test")};
}

// Linearly separable synthetic data: features uniform on [-1, 1]^d, labels
// 1{w.a >= 0} for a hidden unit vector w, then flipped independently with
// probability `margin`. The generating w is kept for reference checks.
inline Dataset synthetic_dataset(std::int64_t m, std::int64_t d, double margin,
                                 const SeedSpec& seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("M and d must be >= 1");
  if (margin < 0.0 || margin > 1.0)
    throw std::invalid_argument("flip probability must lie in [0, 1]");

  RngStream wrng(seed.with_particle(0), StreamPurpose::dataset);
  std::vector<double> w(static_cast<std::size_t>(d));
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (auto& v : w) v = wrng.normal();
    nrm = norm2(w);
  }
  for (auto& v : w) v /= nrm;

  Dataset data;
  data.features = Matrix(static_cast<std::size_t>(m), static_cast<std::size_t>(d));
  data.labels.resize(static_cast<std::size_t>(m));
  data.name = "synthetic";
  data.oracle_weights = w;
  for (std::size_t r = 0; r < data.size(); ++r) {
    RngStream rng(seed.with_particle(r + 1), StreamPurpose::dataset);
    double dot = 0.0;
    for (std::size_t j = 0; j < data.dim(); ++j) {
      data.features(r, j) = rng.uniform(-1.0, 1.0);
      dot += w[j] * data.features(r, j);
    }
    int label = dot >= 0.0 ? 1 : 0;
    if (margin > 0.0 && rng.uniform01() < margin) label = 1 - label;
    data.labels[r] = label;
  }
  return data;
}

// Fraction of instances classified correctly by the linear rule
// predict(a) = 1{x.a >= 0} (equivalently sigmoid(x.a) >= 1/2).
inline double accuracy(std::span<const double> x, const Dataset& data) {
  validate_dataset(data);
  if (x.size() != data.dim())
    throw std::invalid_argument("parameter vector dimension mismatch");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    double dot = 0.0;
    const auto row = data.features.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * row[j];
    const int pred = dot >= 0.0 ? 1 : 0;
    if (pred == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace cbo
