#include <doctest.h>

#include "config.hpp"
#include "errors.hpp"

using namespace mu2opt;
using nlohmann::json;

TEST_CASE("toml subset: scalars, tables, arrays, inline tables") {
  const auto doc = parse_toml(R"(
# comment
algorithm = "mu2_sgd"   # trailing comment
lr = 1e-3
T = 1_000
flag = true
neg = -2

[problem]
kind = "additive_quadratic"
x_star = [
  0.5, 0.0,  # wrapped
  0.0,
]

[sweep]
lr_range = { min = 1e-4, max = 10.0, points = 13 }
a.b.c = "deep"

[schedules.inner]
alpha = { gamma = 0.1 }
)");
  CHECK(doc["algorithm"] == "mu2_sgd");
  CHECK(doc["lr"].get<double>() == 1e-3);
  CHECK(doc["T"].get<std::int64_t>() == 1000);
  CHECK(doc["flag"] == true);
  CHECK(doc["neg"].get<std::int64_t>() == -2);
  CHECK(doc["problem"]["x_star"].size() == 3);
  CHECK(doc["sweep"]["lr_range"]["points"].get<int>() == 13);
  CHECK(doc["sweep"]["a"]["b"]["c"] == "deep");
  CHECK(doc["schedules"]["inner"]["alpha"]["gamma"].get<double>() == 0.1);
}

TEST_CASE("toml subset: errors carry line numbers") {
  try {
    parse_toml("a = 1\nb = \n");
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = 1 2\n"), ConfigError);
}

TEST_CASE("overrides") {
  json doc = parse_toml("lr = 0.1\n[problem]\nsigma = 1.0\n");
  apply_override(doc, "lr=0.5");
  apply_override(doc, "problem.sigma=2");
  apply_override(doc, "algorithm=sgd");
  apply_override(doc, "set.kind=\"box\"");
  apply_override(doc, "sweep.seeds=[1, 2]");
  CHECK(doc["lr"].get<double>() == 0.5);
  CHECK(doc["problem"]["sigma"].get<double>() == 2.0);
  CHECK(doc["algorithm"] == "sgd");
  CHECK(doc["set"]["kind"] == "box");
  CHECK(doc["sweep"]["seeds"].size() == 2);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "lr.x=1"), ConfigError);
}

TEST_CASE("decode a single-run configuration") {
  const auto cfg = decode_configuration(parse_toml(R"(
algorithm = "heavy_ball"
lr = 0.05
T = 500
seed = 3
master_seed = 11
log_points = 10
x1 = [0.1, 0.0]
[problem]
kind = "curvature_quadratic"
c = 0.5
x_star = [0.2, 0.3]
[set]
kind = "box"
lower = [-1, -1]
upper = [1, 1]
[heavy_ball]
momentum = 0.5
dampening = 0.25
)"));
  CHECK(cfg.optimizer.algorithm == Algorithm::heavy_ball);
  CHECK(cfg.optimizer.lr == 0.05);
  CHECK(cfg.optimizer.horizon == 500);
  CHECK(cfg.optimizer.log_points == 10);
  CHECK(cfg.seed == 3);
  CHECK(cfg.master_seed == 11);
  CHECK(cfg.problem.kind == "curvature_quadratic");
  CHECK(cfg.problem.dimension == 2);
  CHECK(cfg.problem.c == 0.5);
  CHECK(std::holds_alternative<Box>(cfg.optimizer.set.shape()));
  CHECK(cfg.optimizer.heavy_ball.momentum == 0.5);
  CHECK(cfg.optimizer.heavy_ball.dampening == 0.25);
  CHECK((*cfg.optimizer.x1)[0] == 0.1);
  CHECK_FALSE(cfg.has_sweep);
}

TEST_CASE("decode schedules") {
  auto cfg = decode_configuration(parse_toml(R"(
algorithm = "mu2_sgd"
[problem]
dimension = 2
[schedules]
alpha = { gamma = 0.2 }
beta = { fixed = 0.8 }
)"));
  REQUIRE(cfg.optimizer.schedules);
  CHECK(cfg.optimizer.schedules->weights.is_fixed_gamma());
  CHECK(cfg.optimizer.schedules->beta(5) == 0.8);
  cfg = decode_configuration(parse_toml("[problem]\ndimension = 2\n[schedules]\nalpha = \"uniform\"\nbeta = \"inverse_t\"\n"));
  CHECK(cfg.optimizer.schedules->weights.name() == "uniform");
  CHECK(cfg.optimizer.schedules->momentum.name() == "inverse_t");
  cfg = decode_configuration(parse_toml("algorithm = \"mu2_sgd_fixed\"\n[problem]\ndimension = 2\n[schedules]\nalpha = \"linear\"\n"));
  CHECK_FALSE(cfg.optimizer.schedules.has_value());
  CHECK_THROWS_AS(decode_configuration(parse_toml("[problem]\ndimension = 2\n[schedules]\nalpha = \"cubic\"\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("[problem]\ndimension = 2\n[schedules]\nbeta = { fixed = 0 }\n")), ConfigError);
}

TEST_CASE("decode a sweep") {
  const auto cfg = decode_configuration(parse_toml(R"(
T = 100
[problem]
dimension = 2
sigma = 1.0
[sweep]
algorithms = ["sgd", "mu2_sgd"]
lr_range = { min = 1e-3, max = 1.0, points = 4 }
seeds = [0, 1, 2]
factor = 3
)"));
  REQUIRE(cfg.has_sweep);
  CHECK(cfg.grid.algorithms.size() == 2);
  CHECK(cfg.grid.learning_rates.size() == 4);
  CHECK(cfg.grid.learning_rates.back() == 1.0);
  CHECK(cfg.grid.seeds.size() == 3);
  CHECK(cfg.grid.base.horizon == 100);
  CHECK(cfg.stability_factor == 3.0);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(decode_configuration(parse_toml("algorithm = \"adam\"\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("lr = \"fast\"\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("T = -5\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("T = 1.5\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("typo = 1\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("[set]\nkind = \"simplex\"\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("[set]\nkind = \"unconstrained\"\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("[sweep]\nalgorithms = [\"sgd\"]\n")), ConfigError);
  CHECK_THROWS_AS(decode_configuration(parse_toml("[sweep]\nalgorithms = [\"sgd\"]\nlearning_rates = [0.1, 0.01]\n")),
                  ConfigError);
  CHECK_THROWS_AS(load_configuration("/nonexistent/config.toml"), ConfigError);
}
