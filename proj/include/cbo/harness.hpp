#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cbo/dataset.hpp"
#include "cbo/engine.hpp"
#include "cbo/objectives.hpp"
#include "cbo/oracle.hpp"

namespace cbo {

struct StatsSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
};

// Nearest-rank percentile: the sorted value at 1-based index ceil(p/100 * n).
inline double nearest_rank_percentile(const std::vector<double>& sorted, double p) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline StatsSummary percentile_summary(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("percentile_summary: empty input");
  std::sort(values.begin(), values.end());
  StatsSummary s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.min = values.front();
  s.max = values.back();
  s.p50 = nearest_rank_percentile(values, 50.0);
  s.p75 = nearest_rank_percentile(values, 75.0);
  s.p90 = nearest_rank_percentile(values, 90.0);
  return s;
}

// Computational cost of a subsampled classification run: k d (ceil(l M) + 2),
// i.e. cost d*ceil(l M) per oracle evaluation plus 2d per position update.
inline double cost(double iterations, std::int64_t d, double ell, std::int64_t m) {
  if (iterations < 0 || d < 1 || !(ell > 0.0) || ell > 1.0 || m < 1)
    throw std::invalid_argument("cost: invalid arguments");
  const double batch = std::ceil(ell * static_cast<double>(m));
  return iterations * static_cast<double>(d) * (batch + 2.0);
}

struct ExperimentConfig {
  CboParams params;
  InitSpec init;
  ObjectiveKind objective = ObjectiveKind::rastrigin;
  double rotation_angle = std::numbers::pi / 3.0;
  const Dataset* train = nullptr;  // finite_sum objective
  const Dataset* test = nullptr;   // accuracy metric, defaults to train
  NoiseSpec noise;
  SubsampleSpec subsample;
  std::int64_t runs = 1;
  std::vector<double> alpha_sweep;  // empty: use params.alpha
  std::vector<double> ell_sweep;    // empty: use subsample.ell
  std::vector<double> x_star;       // enables the error metric when nonempty
  std::uint64_t master_seed = 0;
  bool best_of_alpha = false;
  int n_threads = 0;  // 0: hardware concurrency
};

// One emitted row; `values` metric is the final error when x_star is set,
// otherwise the test accuracy.
struct ResultRow {
  double sigma0 = 0.0;
  double sigma1 = 0.0;
  double ell = 1.0;
  double alpha = 0.0;
  StatsSummary stats;
  double mean_it = 0.0;
  double mean_evals = 0.0;  // component evaluations per run, divided by M
  double mean_cost = 0.0;
  std::int64_t runs_ok = 0;
  std::int64_t runs_failed = 0;
};

namespace detail {

struct SingleRunOutcome {
  bool ok = false;
  double metric = 0.0;
  double iterations = 0.0;
  double component_evals = 0.0;
  double cost = 0.0;
};

inline void parallel_for(std::int64_t count, int n_threads,
                         const std::function<void(std::int64_t)>& body) {
  unsigned hw = n_threads > 0 ? static_cast<unsigned>(n_threads)
                              : std::thread::hardware_concurrency();
  if (hw < 1) hw = 1;
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(count));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Executes `runs` independent seeded runs for every sweep cell (ell x alpha)
// and aggregates the per-run metric. Runs execute in parallel; each run owns
// its streams through its run index, and aggregation sorts the collected
// values, so the output is independent of scheduling.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  if (config.runs < 1) throw std::invalid_argument("runs must be >= 1");
  const bool classification = config.objective == ObjectiveKind::finite_sum;
  if (classification && config.train == nullptr)
    throw std::invalid_argument("finite_sum experiments need a train dataset");
  if (!classification && config.x_star.empty())
    throw std::invalid_argument("benchmark experiments need x_star for the error metric");

  std::vector<double> alphas =
      config.alpha_sweep.empty() ? std::vector<double>{config.params.alpha}
                                 : config.alpha_sweep;
  std::vector<double> ells;
  if (classification)
    ells = config.ell_sweep.empty() ? std::vector<double>{config.subsample.ell}
                                    : config.ell_sweep;
  else
    ells = {1.0};

  ObjectiveSpec ospec;
  ospec.kind = config.objective;
  ospec.angle = config.rotation_angle;
  ospec.dataset = config.train;
  const Objective objective = make_objective(ospec, config.params.dim);
  const Dataset* accuracy_set =
      config.test != nullptr ? config.test : config.train;
  const auto m = classification ? static_cast<std::int64_t>(config.train->size()) : 1;

  std::vector<ResultRow> rows;
  std::size_t cell_index = 0;
  for (double ell : ells) {
    std::vector<ResultRow> cell_rows;
    for (double alpha : alphas) {
      CboParams params = config.params;
      params.alpha = alpha;

      Oracle oracle = classification
                          ? Oracle::subsample(*config.train,
                                              SubsampleSpec{ell, true})
                          : Oracle::gaussian(objective, config.noise);

      std::vector<detail::SingleRunOutcome> outcomes(
          static_cast<std::size_t>(config.runs));
      const std::uint64_t run_base =
          static_cast<std::uint64_t>(cell_index) *
          static_cast<std::uint64_t>(config.runs);
      detail::parallel_for(config.runs, config.n_threads, [&](std::int64_t r) {
        auto& out = outcomes[static_cast<std::size_t>(r)];
        const SeedSpec seed{config.master_seed, run_base + static_cast<std::uint64_t>(r),
                            0, 0, 0};
        try {
          const RunRecord rec = run(params, oracle, config.init, seed);
          out.metric = config.x_star.empty()
                           ? accuracy(rec.final_consensus.point, *accuracy_set)
                           : euclidean_distance(rec.final_consensus.point,
                                                config.x_star);
          out.iterations = static_cast<double>(rec.iterations);
          out.component_evals = static_cast<double>(rec.ledger.component_evals);
          out.cost = rec.ledger.cost;
          out.ok = true;
        } catch (const NonFiniteError&) {
          out.ok = false;
        }
      });

      ResultRow row;
      row.sigma0 = classification ? 0.0 : config.noise.sigma0;
      row.sigma1 = classification ? 0.0 : config.noise.sigma1;
      row.ell = ell;
      row.alpha = alpha;
      std::vector<double> metrics;
      for (const auto& out : outcomes) {
        if (!out.ok) {
          ++row.runs_failed;
          continue;
        }
        metrics.push_back(out.metric);
        row.mean_it += out.iterations;
        row.mean_evals += out.component_evals;
        row.mean_cost += out.cost;
        ++row.runs_ok;
      }
      if (row.runs_ok > 0) {
        const auto ok = static_cast<double>(row.runs_ok);
        row.mean_it /= ok;
        row.mean_evals /= ok * static_cast<double>(m);
        row.mean_cost /= ok;
        row.stats = percentile_summary(std::move(metrics));
      }
      cell_rows.push_back(row);
      ++cell_index;
    }

    rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    if (config.best_of_alpha && alphas.size() > 1 && !config.x_star.empty()) {
      const auto best = std::min_element(
          cell_rows.begin(), cell_rows.end(), [](const auto& a, const auto& b) {
            if (a.runs_ok == 0) return false;
            if (b.runs_ok == 0) return true;
            return a.stats.mean < b.stats.mean;
          });
      if (best != cell_rows.end() && best->runs_ok > 0) rows.push_back(*best);
    }
  }
  return rows;
}

enum class ResultFormat { csv, json };

inline const char* result_header() {
  return "sigma0,sigma1,ell,alpha,mean,min,max,p50,p75,p90,mean_it,mean_evals,"
         "mean_cost,runs_ok,runs_failed";
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Writes result rows with a fixed column order; CSV uses '.' decimals and ','
// separators, JSON emits an array of objects with the same keys.
inline void emit_results(const std::vector<ResultRow>& rows, ResultFormat format,
                         const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("emit_results: no rows");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write results to " + path);

  const char* keys[] = {"sigma0", "sigma1", "ell", "alpha", "mean", "min",
                        "max", "p50", "p75", "p90", "mean_it", "mean_evals",
                        "mean_cost", "runs_ok", "runs_failed"};
  auto fields = [](const ResultRow& r) {
    return std::vector<std::string>{
        detail::format_double(r.sigma0), detail::format_double(r.sigma1),
        detail::format_double(r.ell), detail::format_double(r.alpha),
        detail::format_double(r.stats.mean), detail::format_double(r.stats.min),
        detail::format_double(r.stats.max), detail::format_double(r.stats.p50),
        detail::format_double(r.stats.p75), detail::format_double(r.stats.p90),
        detail::format_double(r.mean_it), detail::format_double(r.mean_evals),
        detail::format_double(r.mean_cost), std::to_string(r.runs_ok),
        std::to_string(r.runs_failed)};
  };

  if (format == ResultFormat::csv) {
    out << result_header() << '\n';
    for (const auto& row : rows) {
      const auto fs = fields(row);
      for (std::size_t i = 0; i < fs.size(); ++i)
        out << (i ? "," : "") << fs[i];
      out << '\n';
    }
  } else {
    out << "[\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto fs = fields(rows[r]);
      out << "  {";
      for (std::size_t i = 0; i < fs.size(); ++i)
        out << (i ? ", " : "") << '"' << keys[i] << "\": " << fs[i];
      out << '}' << (r + 1 < rows.size() ? "," : "") << '\n';
    }
    out << "]\n";
  }
  if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace cbo
