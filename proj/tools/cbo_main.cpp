// Command-line front end: single runs, sweep campaigns, the theory property
// suite, closed-form bound evaluation, and dataset utilities.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbo/cbo.hpp"

namespace {

using nlohmann::json;

// Relative output paths can be redirected with CBO_OUTPUT_DIR.
std::string resolve_output(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* dir = std::getenv("CBO_OUTPUT_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  return std::string(dir) + "/" + path;
}

struct LoadedObjective {
  cbo::ObjectiveKind kind;
  cbo::Dataset train;
  cbo::Dataset test;
  bool has_split = false;
  double rotation_angle = 0.0;
};

LoadedObjective load_objective(const cbo::Config& cfg, const cbo::CboParams& params) {
  LoadedObjective obj;
  obj.kind = cbo::objective_kind_from_config(cfg);
  obj.rotation_angle = cfg.get_double("rotation_angle", std::numbers::pi / 3.0);
  if (obj.kind != cbo::ObjectiveKind::finite_sum) return obj;

  cbo::Dataset full;
  if (cfg.has("dataset")) {
    full = cbo::load_dataset(cfg.require_string("dataset"),
                             cfg.get_string("label_column", "label"));
  } else {
    full = cbo::synthetic_dataset(
        cfg.get_int("synth_m", 2000), params.dim, cfg.get_double("synth_margin", 0.05),
        cbo::SeedSpec{std::uint64_t(cfg.get_int("synth_seed", 1))});
  }
  if (static_cast<std::int64_t>(full.dim()) != params.dim)
    throw std::runtime_error("dataset dimension " + std::to_string(full.dim()) +
                             " does not match dim = " + std::to_string(params.dim));
  if (cfg.has("train_size")) {
    auto split = cbo::split_dataset(
        full, cfg.get_int("train_size", 0),
        cbo::SeedSpec{std::uint64_t(cfg.get_int("split_seed", 1))});
    obj.train = std::move(split.first);
    obj.test = std::move(split.second);
    obj.has_split = true;
  } else {
    obj.train = std::move(full);
  }
  return obj;
}

cbo::Oracle make_oracle(const cbo::Config& cfg, const LoadedObjective& obj,
                        const cbo::CboParams& params) {
  if (obj.kind == cbo::ObjectiveKind::finite_sum) {
    return cbo::Oracle::subsample(obj.train,
                                  cbo::SubsampleSpec{cfg.get_double("ell", 1.0), true});
  }
  cbo::ObjectiveSpec spec;
  spec.kind = obj.kind;
  spec.angle = obj.rotation_angle;
  return cbo::Oracle::gaussian(cbo::make_objective(spec, params.dim),
                               cbo::noise_from_config(cfg));
}

void write_diagnostics_csv(const cbo::RunRecord& rec, std::size_t dim,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write diagnostics to " + path);
  out << "iter,stopping_metric";
  for (std::size_t s = 0; s < dim; ++s) out << ",diam_" << s;
  out << ",v_k,cost_so_far\n";
  char buf[40];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const auto& st : rec.diagnostics) {
    out << st.iter;
    emit(st.stopping_metric);
    for (double dm : st.diam) emit(dm);
    emit(st.v_k);
    emit(st.cost_so_far);
    out << '\n';
  }
}

json run_record_to_json(const cbo::RunRecord& rec) {
  json positions = json::array();
  for (std::size_t i = 0; i < rec.final_ensemble.n(); ++i) {
    json row = json::array();
    for (double v : rec.final_ensemble.positions.row(i)) row.push_back(v);
    positions.push_back(std::move(row));
  }
  return json{
      {"iterations", rec.iterations},
      {"termination", cbo::to_string(rec.termination)},
      {"stopping_metric", cbo::stopping_metric(rec.final_ensemble)},
      {"final_consensus",
       {{"point", rec.final_consensus.point}, {"weights", rec.final_consensus.weights}}},
      {"final_ensemble",
       {{"iteration", rec.final_ensemble.iteration}, {"positions", positions}}},
      {"ledger",
       {{"oracle_calls", rec.ledger.oracle_calls},
        {"component_evals", rec.ledger.component_evals},
        {"cost", rec.ledger.cost}}}};
}

int command_run(const std::string& config_path, const std::string& diagnostics_path) {
  const cbo::Config cfg = cbo::Config::parse_file(config_path);
  const cbo::CboParams params = cbo::params_from_config(cfg);
  const auto report = cbo::validate_params(params);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (!report.ok()) {
    for (const auto& e : report.errors) std::cerr << "error: " << e << '\n';
    return 1;
  }

  const LoadedObjective obj = load_objective(cfg, params);
  const cbo::Oracle oracle = make_oracle(cfg, obj, params);
  const cbo::InitSpec init = cbo::init_from_config(cfg, params.dim);

  cbo::DiagnosticsOptions diag;
  diag.per_iteration = !diagnostics_path.empty();
  diag.x_star = cfg.get_list("x_star");

  const cbo::SeedSpec seed{std::uint64_t(cfg.get_int("seed", 0)),
                           std::uint64_t(cfg.get_int("run_index", 0))};
  const cbo::RunRecord rec = cbo::run(params, oracle, init, seed, diag);

  json out = run_record_to_json(rec);
  if (!diag.x_star.empty())
    out["final_error"] =
        cbo::euclidean_distance(rec.final_consensus.point, diag.x_star);
  if (obj.kind == cbo::ObjectiveKind::finite_sum) {
    const cbo::Dataset& eval_set = obj.has_split ? obj.test : obj.train;
    out["test_accuracy"] = cbo::accuracy(rec.final_consensus.point, eval_set);
  }

  const std::string out_path = cfg.get_string("output");
  if (out_path.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    const std::string resolved = resolve_output(out_path);
    std::ofstream file(resolved);
    if (!file) throw std::runtime_error("cannot write " + resolved);
    file << out.dump(2) << '\n';
    std::cerr << "run record written to " << resolved << '\n';
  }
  if (!diagnostics_path.empty()) {
    write_diagnostics_csv(rec, std::size_t(params.dim),
                          resolve_output(diagnostics_path));
    std::cerr << "diagnostics written to " << resolve_output(diagnostics_path) << '\n';
  }
  return 0;
}

int command_sweep(const std::string& config_path) {
  const cbo::Config cfg = cbo::Config::parse_file(config_path);

  cbo::ExperimentConfig config;
  config.params = cbo::params_from_config(cfg);
  config.init = cbo::init_from_config(cfg, config.params.dim);
  config.objective = cbo::objective_kind_from_config(cfg);
  config.rotation_angle = cfg.get_double("rotation_angle", std::numbers::pi / 3.0);
  config.noise = cbo::noise_from_config(cfg);
  config.subsample.ell = cfg.get_double("ell", 1.0);
  config.runs = cfg.get_int("runs", 1);
  config.alpha_sweep = cfg.get_list("alpha_sweep");
  config.ell_sweep = cfg.get_list("ell_sweep");
  config.x_star = cfg.get_list("x_star");
  config.master_seed = std::uint64_t(cfg.get_int("seed", 0));
  config.best_of_alpha = cfg.get_bool("best_of_alpha", false);
  config.n_threads = int(cfg.get_int("threads", 0));

  const LoadedObjective obj = load_objective(cfg, config.params);
  if (config.objective == cbo::ObjectiveKind::finite_sum) {
    config.train = &obj.train;
    config.test = obj.has_split ? &obj.test : &obj.train;
  }

  const auto rows = cbo::run_experiment(config);
  const std::string format_name = cfg.get_string("format", "csv");
  const cbo::ResultFormat format = format_name == "json" ? cbo::ResultFormat::json
                                                         : cbo::ResultFormat::csv;
  const std::string out_path =
      resolve_output(cfg.get_string("output", "results." + format_name));
  cbo::emit_results(rows, format, out_path);
  std::cout << rows.size() << " rows written to " << out_path << '\n';
  return 0;
}

int command_check(std::int64_t steps, std::uint64_t seed) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::printf("%-44s %s  %s\n", name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++failures;
  };

  cbo::StepSuiteConfig cfg;
  cfg.steps = steps;
  cfg.master_seed = seed;
  const cbo::StepSuiteResult res = cbo::run_step_lemma_suite(cfg);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max err %.2e over %lld steps",
                res.max_equivalence_error, static_cast<long long>(res.steps));
  report("matrix/particle equivalence", res.equivalence_failures == 0, buf);
  std::snprintf(buf, sizeof(buf), "max err %.2e", res.max_row_sum_error);
  report("transition rows sum to 1", res.row_sum_failures == 0, buf);
  report("diameter contraction per step", res.contraction_failures == 0, "");
  report("ergodicity lower bound", res.erg_bound_failures == 0, "");
  report("consensus gap bound", res.gap_bound_failures == 0, "");

  bool moments_ok = true;
  for (std::int64_t n : {1, 10, 100}) {
    for (double xi : {0.0056, 0.1, 1.0}) {
      const auto check =
          cbo::gaussian_max_moment_check(n, xi, 20000, cbo::SeedSpec{seed + 7});
      if (!check.within_bounds()) moments_ok = false;
    }
  }
  report("gaussian max-moment bounds", moments_ok, "N in {1,10,100}");

  // Subsampling unbiasedness by exhaustive subset enumeration.
  bool unbiased_ok = true;
  double max_rel = 0.0;
  for (std::int64_t m = 1; m <= 6; ++m) {
    cbo::Dataset data;
    data.features = cbo::Matrix(std::size_t(m), 2);
    data.labels.assign(std::size_t(m), 0);
    cbo::RngStream rng(cbo::SeedSpec{seed + std::uint64_t(m)},
                       cbo::StreamPurpose::trial);
    for (std::size_t i = 0; i < data.size(); ++i) {
      data.features(i, 0) = rng.uniform(-2, 2);
      data.features(i, 1) = rng.uniform(-2, 2);
      data.labels[i] = rng.uniform01() < 0.5 ? 0 : 1;
    }
    const std::vector<double> x{0.7, -0.4};
    const double full = cbo::finite_sum_loss(x, data);
    for (std::size_t n = 1; n <= std::size_t(m); ++n) {
      std::vector<std::uint32_t> subset(n);
      for (std::size_t i = 0; i < n; ++i) subset[i] = std::uint32_t(i);
      double total = 0.0;
      std::size_t count = 0;
      for (;;) {
        total += cbo::finite_sum_loss(x, data, &subset);
        ++count;
        std::size_t i = n - 1;
        while (i > 0 && subset[i] == i + data.size() - n) --i;
        if (subset[i] == i + data.size() - n) break;
        ++subset[i];
        for (std::size_t j = i + 1; j < n; ++j) subset[j] = subset[j - 1] + 1;
      }
      const double rel = std::abs(total / double(count) - full) / full;
      max_rel = std::max(max_rel, rel);
      if (rel > 1e-14) unbiased_ok = false;
    }
  }
  std::snprintf(buf, sizeof(buf), "max rel err %.2e (M <= 6)", max_rel);
  report("subsampling unbiasedness", unbiased_ok, buf);

  std::printf("%s\n", failures == 0 ? "all checks passed" : "CHECK FAILURES PRESENT");
  return failures == 0 ? 0 : 1;
}

int command_bounds(const std::string& config_path) {
  const cbo::Config cfg = cbo::Config::parse_file(config_path);
  const double gamma = cfg.get_double("gamma", 0.1);
  const double xi = cfg.get_double("xi", 0.0056);
  const std::int64_t n = cfg.get_int("n_particles", 100);
  const double theta_value = cbo::theta(gamma, xi, n);
  std::printf("theta(gamma=%g, xi=%g, N=%lld) = %.12g%s\n", gamma, xi,
              static_cast<long long>(n), theta_value,
              theta_value < 1.0 ? "" : "  [>= 1: contraction not guaranteed]");

  if (cfg.has("t0") || cfg.has("t1")) {
    const double t0 = cfg.get_double("t0", 0.0);
    const double t1 = cfg.get_double("t1", 0.0);
    const double mf = cfg.get_double("mf", 0.0);
    std::printf("M_v generic  = %.12g\n",
                cbo::mv_bound(t0, t1, mf, n, cbo::MvMode::generic));
    std::printf("M_v gaussian = %.12g\n",
                cbo::mv_bound(t0, t1, mf, n, cbo::MvMode::gaussian));
  }

  if (cfg.has("eps") && cfg.has("tau")) {
    const auto sched = cbo::complexity_schedule(
        cfg.require_double("eps"), cfg.require_double("tau"), gamma, xi,
        cfg.get_double("v0", 1.0), n);
    std::printf("mu = %.12g, sigma_hat = %.12g, k_star = %lld\n", sched.mu,
                sched.sigma_hat, static_cast<long long>(sched.k_star));
  }

  if (cfg.has("mh") || cfg.has("mg")) {
    const auto rep = cbo::theory_constants(
        cfg.get_double("mh", 0.0), cfg.get_double("mg", 0.0), gamma, xi,
        cfg.get_double("alpha", 1.0), cfg.get_double("mv", 0.0),
        cfg.get_double("d0", 1.0), cfg.get_double("f_star", 0.0),
        cfg.get_double("e_exp_f0", 1.0), cfg.get_double("eps_margin", 0.1),
        theta_value);
    std::printf("Gamma_A = %.12g, Gamma_B = %.12g\n", rep.gamma_a, rep.gamma_b);
    if (rep.applicable)
      std::printf("initial-distribution condition: lhs = %.12g, rhs = %.12g -> %s\n",
                  rep.lhs, rep.rhs, rep.condition_holds ? "holds" : "violated");
    else
      std::printf("initial-distribution condition: not applicable (theta >= 1)\n");
  }
  return 0;
}

void write_dataset_csv(const cbo::Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features(i, j));
      out << buf << ',';
    }
    out << data.labels[i] << '\n';
  }
}

int command_dataset_synth(std::int64_t m, std::int64_t d, double margin,
                          std::uint64_t seed, const std::string& out_path) {
  const cbo::Dataset data = cbo::synthetic_dataset(m, d, margin, cbo::SeedSpec{seed});
  const std::string resolved = resolve_output(out_path);
  write_dataset_csv(data, resolved);
  std::cout << "wrote " << data.size() << " instances to " << resolved << '\n';
  return 0;
}

int command_dataset_split(const std::string& in_path, const std::string& label_column,
                          std::int64_t train_size, std::uint64_t seed,
                          const std::string& out_train, const std::string& out_test) {
  const cbo::Dataset data = cbo::load_dataset(in_path, label_column);
  const auto [train, test] = cbo::split_dataset(data, train_size, cbo::SeedSpec{seed});
  write_dataset_csv(train, resolve_output(out_train));
  write_dataset_csv(test, resolve_output(out_test));
  std::cout << "split " << data.size() << " instances into " << train.size() << " / "
            << test.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consensus-based optimization engine and verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string diagnostics_path;
  auto* run_cmd = app.add_subcommand("run", "execute a single run from a config file");
  run_cmd->add_option("config", config_path, "configuration file")->required();
  run_cmd->add_option("--diagnostics", diagnostics_path,
                      "write per-iteration diagnostics CSV to this path");

  std::string sweep_config;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "run a multi-run campaign over sweep cells");
  sweep_cmd->add_option("config", sweep_config, "configuration file")->required();

  std::int64_t check_steps = 2000;
  std::uint64_t check_seed = 2024;
  auto* check_cmd =
      app.add_subcommand("check", "run the theory property suite and print a table");
  check_cmd->add_option("--steps", check_steps, "randomized steps to test");
  check_cmd->add_option("--seed", check_seed, "master seed");

  std::string bounds_config;
  auto* bounds_cmd =
      app.add_subcommand("bounds", "evaluate closed-form constants from a config");
  bounds_cmd->add_option("config", bounds_config, "configuration file")->required();

  auto* dataset_cmd = app.add_subcommand("dataset", "dataset utilities");
  dataset_cmd->require_subcommand(1);

  std::int64_t synth_m = 2000, synth_d = 7;
  double synth_margin = 0.05;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "synthetic.csv";
  auto* synth_cmd =
      dataset_cmd->add_subcommand("synth", "generate a synthetic labeled dataset");
  synth_cmd->add_option("--m", synth_m, "number of instances");
  synth_cmd->add_option("--d", synth_d, "feature dimension");
  synth_cmd->add_option("--margin", synth_margin, "label flip probability");
  synth_cmd->add_option("--seed", synth_seed, "master seed");
  synth_cmd->add_option("--out", synth_out, "output CSV path");

  std::string split_in, split_label = "label";
  std::string split_out_train = "train.csv", split_out_test = "test.csv";
  std::int64_t split_train_size = 0;
  std::uint64_t split_seed = 1;
  auto* split_cmd =
      dataset_cmd->add_subcommand("split", "split a CSV dataset into train/test");
  split_cmd->add_option("--in", split_in, "input CSV path")->required();
  split_cmd->add_option("--label-column", split_label, "label column name or index");
  split_cmd->add_option("--train-size", split_train_size, "training rows")->required();
  split_cmd->add_option("--seed", split_seed, "master seed");
  split_cmd->add_option("--out-train", split_out_train, "training output path");
  split_cmd->add_option("--out-test", split_out_test, "testing output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return command_run(config_path, diagnostics_path);
    if (sweep_cmd->parsed()) return command_sweep(sweep_config);
    if (check_cmd->parsed()) return command_check(check_steps, check_seed);
    if (bounds_cmd->parsed()) return command_bounds(bounds_config);
    if (synth_cmd->parsed())
      return command_dataset_synth(synth_m, synth_d, synth_margin, synth_seed,
                                   synth_out);
    if (split_cmd->parsed())
      return command_dataset_split(split_in, split_label, split_train_size,
                                   split_seed, split_out_train, split_out_test);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
