#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "cbo/config.hpp"

using namespace cbo;

namespace {

const char* kSample = R"(
# benchmark configuration
gamma = 0.1
xi = 0.0056
alpha = 1e4          # Gibbs weight
n_particles = 100
dim = 2
noise_mode = shared
max_iter = 1000
consensus_tol = 1e-3
init.kind = uniform_box
init.lower = -3
init.upper = 1, 3
seed = 42
sigma0 = 0.25
sigma1 = 0.1
runs = 10
alpha_sweep = 1e4, 10, 1, 0.1
x_star = 0, 0
best_of_alpha = true
output = results.csv
)";

}  // namespace

TEST_CASE("config parses flat key-value text with comments") {
  const Config cfg = Config::parse_string(kSample);
  REQUIRE(cfg.get_double("gamma", 0) == 0.1);
  REQUIRE(cfg.get_double("alpha", 0) == 1e4);
  REQUIRE(cfg.get_int("n_particles", 0) == 100);
  REQUIRE(cfg.get_string("output") == "results.csv");
  REQUIRE(cfg.get_bool("best_of_alpha", false));
  REQUIRE(cfg.get_list("alpha_sweep") == std::vector<double>{1e4, 10, 1, 0.1});
  REQUIRE_FALSE(cfg.has("ell"));
  REQUIRE(cfg.get_double("ell", 1.0) == 1.0);
}

TEST_CASE("config reports missing and malformed values") {
  const Config cfg = Config::parse_string("a = 1\nb = text\nc = 1.5\n");
  REQUIRE_THROWS_AS(cfg.require_string("missing"), std::runtime_error);
  REQUIRE_THROWS_AS(cfg.require_double("b"), std::runtime_error);
  REQUIRE_THROWS_AS(cfg.get_int("c", 0), std::runtime_error);
  REQUIRE_THROWS_AS(cfg.get_bool("b", false), std::runtime_error);
  REQUIRE_THROWS_AS(Config::parse_string("just a line without equals\n"),
                    std::runtime_error);
}

TEST_CASE("vector keys broadcast scalars and enforce lengths") {
  const Config cfg = Config::parse_string(kSample);
  REQUIRE(cfg.get_vector("init.lower", 2, 0.0) == std::vector<double>{-3, -3});
  REQUIRE(cfg.get_vector("init.upper", 2, 0.0) == std::vector<double>{1, 3});
  REQUIRE(cfg.get_vector("absent", 2, 7.0) == std::vector<double>{7, 7});
  REQUIRE_THROWS_AS(cfg.get_vector("init.upper", 3, 0.0), std::runtime_error);
}

TEST_CASE("builders assemble typed structures") {
  const Config cfg = Config::parse_string(kSample);

  const CboParams p = params_from_config(cfg);
  REQUIRE(p.gamma == 0.1);
  REQUIRE(p.xi == 0.0056);
  REQUIRE(p.n_particles == 100);
  REQUIRE(p.dim == 2);
  REQUIRE(p.noise_mode == NoiseMode::shared);
  REQUIRE(p.max_iter == 1000);
  REQUIRE(p.consensus_tol == 1e-3);

  const InitSpec init = init_from_config(cfg, p.dim);
  REQUIRE(init.kind == InitKind::uniform_box);
  REQUIRE(init.lower == std::vector<double>{-3, -3});
  REQUIRE(init.upper == std::vector<double>{1, 3});

  const NoiseSpec noise = noise_from_config(cfg);
  REQUIRE(noise.sigma0 == 0.25);
  REQUIRE(noise.sigma1 == 0.1);

  REQUIRE(objective_kind_from_config(cfg) == ObjectiveKind::rastrigin);
}

TEST_CASE("builders reject unknown enumeration values") {
  REQUIRE_THROWS_AS(params_from_config(Config::parse_string("noise_mode = both\n")),
                    std::runtime_error);
  REQUIRE_THROWS_AS(init_from_config(Config::parse_string("init.kind = grid\n"), 2),
                    std::runtime_error);
  REQUIRE_THROWS_AS(
      objective_kind_from_config(Config::parse_string("objective = ackley\n")),
      std::runtime_error);
}

TEST_CASE("gaussian initialization keys") {
  const Config cfg =
      Config::parse_string("init.kind = gaussian\ninit.mean = 1, 2\ninit.std = 0.5\n");
  const InitSpec init = init_from_config(cfg, 2);
  REQUIRE(init.kind == InitKind::gaussian);
  REQUIRE(init.mean == std::vector<double>{1, 2});
  REQUIRE(init.stddev == std::vector<double>{0.5, 0.5});
}

TEST_CASE("config files load from disk") {
  const std::string path = "cbo_test_config.cfg";
  {
    std::ofstream out(path);
    out << "gamma = 0.25\n";
  }
  const Config cfg = Config::parse_file(path);
  REQUIRE(cfg.get_double("gamma", 0) == 0.25);
  std::remove(path.c_str());
  REQUIRE_THROWS_AS(Config::parse_file("missing_config.cfg"), std::runtime_error);
}
