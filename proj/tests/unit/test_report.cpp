#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "errors.hpp"
#include "report.hpp"

using namespace mu2opt;

namespace {

std::vector<RunRecord> fixture_records() {
  SweepGrid g;
  g.algorithms = {Algorithm::sgd, Algorithm::mu2_sgd};
  g.learning_rates = {0.01, 0.1, 1.0};
  g.seeds = {0, 1};
  g.problem.dimension = 2;
  g.problem.sigma = 1.0;
  g.base.horizon = 100;
  g.base.log_points = 10;
  g.base.set = FeasibleSet::unit_ball(2);
  return sweep(g, 3);
}

}  // namespace

TEST_CASE("results csv round trip") {
  const auto records = fixture_records();
  const auto rows = result_rows(records);
  std::size_t expected = 0;
  for (const auto& r : records) expected += r.trajectory.points.size();
  CHECK(rows.size() == expected);
  const auto text = format_results_csv(rows);
  CHECK(text.rfind(std::string(kResultsHeader) + "\n", 0) == 0);
  const auto parsed = parse_results_csv(text);
  REQUIRE(parsed.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].algo == rows[i].algo);
    CHECK(parsed[i].lr == rows[i].lr);
    CHECK(parsed[i].t == rows[i].t);
    CHECK(parsed[i].f_gap == rows[i].f_gap);
    CHECK(parsed[i].eps_sq == rows[i].eps_sq);
    CHECK(parsed[i].iterate_norm == rows[i].iterate_norm);
  }
  CHECK(format_results_csv(parsed) == text);
}

TEST_CASE("results csv: empty optionals and failed runs") {
  RunRecord failed;
  failed.algorithm = Algorithm::storm;
  failed.lr = 0.5;
  failed.seed = 2;
  failed.error = "boom";
  RunRecord unknown;
  unknown.algorithm = Algorithm::sgd;
  LogPoint p;
  p.t = 1;
  unknown.trajectory.points.push_back(p);
  const auto text = format_results_csv(result_rows({failed, unknown}));
  CHECK(text.find("storm,0.5,2,0,,,0,0,1\n") != std::string::npos);
  CHECK(text.find("sgd,0,0,1,,,0,0,0\n") != std::string::npos);
}

TEST_CASE("results csv: schema violations name the column") {
  const std::string header(kResultsHeader);
  try {
    parse_results_csv("algo,lr,seed,step,f_gap,eps_sq,iterate_norm,samples_used,diverged\n");
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("'t'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_results_csv(""), IngestionError);
  CHECK_THROWS_AS(parse_results_csv(header + ",extra\n"), IngestionError);
  CHECK_THROWS_AS(parse_results_csv(header + "\nsgd,0.1,0,1,0.5,,1,1\n"), IngestionError);
  try {
    parse_results_csv(header + "\nsgd,0.1,0,1,0.5,,1,1,0\nsgd,fast,0,1,0.5,,1,1,0\n");
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("'lr'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_results_csv(header + "\nsgd,0.1,0,1,0.5,,1,1,2\n"), IngestionError);
  CHECK(parse_results_csv(header + "\n").empty());
}

TEST_CASE("analyze: statistics, stability and slopes") {
  const auto rows = result_rows(fixture_records());
  const auto summary = analyze_rows(rows);
  CHECK_NOTHROW(check_sweep_summary_schema(summary));
  CHECK(summary["runs"] == 12);
  CHECK(summary["cells"].size() == 6);
  CHECK(summary["stability"].contains("sgd"));
  CHECK(summary["stability"].contains("mu2_sgd"));
  CHECK(summary["slopes"]["mu2_sgd"].contains("eps_sq_vs_t"));
  for (const auto& c : summary["cells"]) {
    CHECK(c["seeds"] == 2);
    CHECK(c["f_gap_max"].get<double>() >= c["f_gap_mean"].get<double>());
    CHECK(c["f_gap_q95"].get<double>() <= c["f_gap_max"].get<double>());
  }
  CHECK(analyze_rows(parse_results_csv(format_results_csv(rows))) == summary);
  CHECK_THROWS_AS(analyze_rows({}), Error);
}

TEST_CASE("analyze: diverged runs rank as infinity") {
  std::vector<ResultRow> rows;
  for (double lr : {0.1, 1.0, 10.0}) {
    for (std::int64_t seed : {0, 1}) {
      ResultRow r;
      r.algo = "sgd";
      r.lr = lr;
      r.seed = seed;
      r.t = 5;
      r.f_gap = lr;
      r.diverged = lr == 10.0 && seed == 1;
      rows.push_back(r);
    }
  }
  const auto s = analyze_rows(rows);
  CHECK(s["cells"][2]["f_gap_mean"] == "inf");
  CHECK(s["cells"][2]["f_gap_max"] == "inf");
  CHECK(s["cells"][2]["diverged"] == 1);
  CHECK(s["stability"]["sgd"]["eta_star"] == 0.1);
}

TEST_CASE("run summary schema") {
  RunConfiguration cfg;
  cfg.document = nlohmann::json::object();
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, Point::Zero(2), 0.0, k);
  OptimizerConfig c;
  c.set = k;
  c.horizon = 10;
  const auto rec = run_single(p, c, 0, 1);
  const auto s = run_summary(rec, cfg, *p, 1, {"lr=0.5"});
  CHECK_NOTHROW(check_summary_schema(s));
  CHECK(s["diverged"] == false);
  CHECK(s["provenance"]["overrides"][0] == "lr=0.5");
  CHECK(s["measured_at"] == "average");
  nlohmann::json broken = s;
  broken.erase("diverged");
  CHECK_THROWS_AS(check_summary_schema(broken), Error);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "mu2opt_report_test";
  std::filesystem::remove_all(dir);
  prepare_output_dir(dir / "nested");
  write_text_file(dir / "nested" / "a.txt", "hello");
  CHECK(read_text_file(dir / "nested" / "a.txt") == "hello");
  CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), IoError);
  write_text_file(dir / "blocker", "x");
  CHECK_THROWS_AS(prepare_output_dir(dir / "blocker" / "sub"), IoError);
  std::filesystem::remove_all(dir);
}
