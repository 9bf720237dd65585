#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "codedbai/cli.hpp"
#include "codedbai/codedbai.hpp"
#include "test_support.hpp"

using namespace codedbai;

namespace {

SweepConfig small_config(double sigma) {
  SweepConfig config;
  config.master_seed = 77;
  config.sigma = sigma;
  GeneratorSpec spec;
  spec.kind = GeneratorKind::Sphere;
  spec.d = 4;
  spec.k = 8;
  spec.seed = 5;
  config.instances = {spec};
  config.algorithms = {"secure", "od_linbai", "per_entry"};
  config.t_grid = {400, 800};
  config.trials = 40;
  return config;
}

}  // namespace

TEST_CASE("noiseless sweeps have zero error everywhere") {
  const SweepTable table = monte_carlo(small_config(0.0));
  REQUIRE(table.rows.size() == 6);
  for (const auto& row : table.rows) {
    CHECK(row.errors == 0);
    CHECK(row.pe_hat == 0.0);
    CHECK(row.mean_pulls <= static_cast<double>(row.t_budget));
    CHECK(row.note.empty());
  }
}

TEST_CASE("sweeps are deterministic and worker-count independent") {
  SweepConfig config = small_config(1.0);
  const SweepTable a = monte_carlo(config);
  const SweepTable b = monte_carlo(config);
  config.workers = 1;
  const SweepTable c = monte_carlo(config);
  config.workers = 4;
  const SweepTable d = monte_carlo(config);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].errors == b.rows[i].errors);
    CHECK(a.rows[i].errors == c.rows[i].errors);
    CHECK(a.rows[i].errors == d.rows[i].errors);
    CHECK(a.rows[i].mean_pulls == d.rows[i].mean_pulls);
  }
}

TEST_CASE("wilson interval width shrinks like the square root of trials") {
  const auto narrow = wilson_interval(50, 1000);
  const auto wide = wilson_interval(25, 500);
  const double w_narrow = narrow.hi - narrow.lo;
  const double w_wide = wide.hi - wide.lo;
  CHECK_THAT(w_wide / w_narrow, Catch::Matchers::WithinAbs(std::sqrt(2.0), 0.05));
}

TEST_CASE("sweep csv round trips through the frozen schema") {
  const SweepTable table = monte_carlo(small_config(1.0));
  const std::string path = "sweep_roundtrip.csv";
  write_sweep_csv(table, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "algo,d,K,T,trials,errors,pe_hat,ci_lo,ci_hi,mean_pulls");
  in.close();
  const SweepTable back = read_sweep_csv(path);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    CHECK(back.rows[i].algo == table.rows[i].algo);
    CHECK(back.rows[i].errors == table.rows[i].errors);
    CHECK(back.rows[i].t_budget == table.rows[i].t_budget);
  }
  std::remove(path.c_str());
}

TEST_CASE("fit recovers the slope of a synthetic exponential decay") {
  SweepTable table;
  const double c = 1e-3;
  for (long t : {1000L, 2000L, 3000L, 4000L, 5000L}) {
    SweepRow row;
    row.algo = "synthetic";
    row.d = 4;
    row.k = 8;
    row.t_budget = t;
    row.trials = 1000000;
    row.pe_hat = std::exp(-c * static_cast<double>(t));
    row.errors = static_cast<long>(std::lround(row.pe_hat * static_cast<double>(row.trials)));
    row.pe_hat = static_cast<double>(row.errors) / static_cast<double>(row.trials);
    table.rows.push_back(row);
  }
  const ExponentFit fit = fit_exponent(table, "synthetic");
  CHECK(fit.points_used == 5);
  CHECK_THAT(fit.slope, Catch::Matchers::WithinRel(c, 0.05));
}

TEST_CASE("fit of a flat coin-flip table is statistically zero") {
  SweepTable table;
  Rng rng(5);
  for (long t : {1000L, 2000L, 3000L, 4000L}) {
    SweepRow row;
    row.algo = "coin";
    row.t_budget = t;
    row.trials = 4000;
    long errors = 0;
    for (long i = 0; i < row.trials; ++i) errors += rng.uniform() < 0.5;
    row.errors = errors;
    row.pe_hat = static_cast<double>(errors) / static_cast<double>(row.trials);
    table.rows.push_back(row);
  }
  const ExponentFit fit = fit_exponent(table, "coin");
  CHECK(std::abs(fit.slope) <= 3 * fit.slope_se);
}

TEST_CASE("zero-error cells become rule-of-three annotations, not points") {
  SweepTable table;
  for (long t : {100L, 200L, 300L, 400L}) {
    SweepRow row;
    row.algo = "a";
    row.t_budget = t;
    row.trials = 500;
    row.errors = t == 400 ? 0 : 50;
    row.pe_hat = static_cast<double>(row.errors) / 500.0;
    table.rows.push_back(row);
  }
  const ExponentFit fit = fit_exponent(table, "a");
  CHECK(fit.points_used == 3);
  REQUIRE(fit.zero_error_bounds.size() == 1);
  CHECK(fit.zero_error_bounds.front().first == 400);
  CHECK_THAT(fit.zero_error_bounds.front().second, Catch::Matchers::WithinAbs(3.0 / 500.0, 1e-12));
  CHECK_FALSE(fit.rule_of_three_used);
}

TEST_CASE("fit requires at least three usable cells") {
  SweepTable table;
  for (long t : {100L, 200L}) {
    SweepRow row;
    row.algo = "a";
    row.t_budget = t;
    row.trials = 100;
    row.errors = 20;
    row.pe_hat = 0.2;
    table.rows.push_back(row);
  }
  CHECK_THROWS_AS(fit_exponent(table, "a"), InsufficientData);
}

TEST_CASE("cli: design prints a weight table as json") {
  const Instance inst = testsup::sphere_instance(4, 8, 3);
  write_instance(inst, "cli_design_instance.json");
  CHECK(run_cli({"design", "--instance", "cli_design_instance.json"}) == 0);
  std::remove("cli_design_instance.json");
}

TEST_CASE("cli: sweep writes a schema-valid csv and fit reads it back") {
  {
    std::ofstream out("cli_sweep_config.json");
    out << R"({"sigma": 1.0,
               "instances": [{"kind": "sphere", "d": 4, "k": 8, "seed": 5}],
               "algorithms": ["secure", "od_linbai", "single_round_uniform"],
               "t_grid": [300, 600, 900],
               "trials": 30})";
  }
  CHECK(run_cli({"sweep", "--config", "cli_sweep_config.json", "--out", "cli_sweep.csv",
                 "--seed", "11"}) == 0);
  const SweepTable table = read_sweep_csv("cli_sweep.csv");
  CHECK(table.rows.size() == 9);
  // fit may or may not have enough errors; just exercise the subcommand path
  run_cli({"fit", "--in", "cli_sweep.csv", "--algo", "single_round_uniform", "--rule-of-three"});
  std::remove("cli_sweep_config.json");
  std::remove("cli_sweep.csv");
}

TEST_CASE("cli: missing required flags exit nonzero") {
  CHECK(run_cli({"sweep", "--config", "nope.json", "--out", "x.csv"}) != 0);  // no --seed
  CHECK(run_cli({"run", "--T", "100"}) != 0);                                 // no --seed
  CHECK(run_cli({"definitely-not-a-subcommand"}) != 0);
  CHECK(run_cli({}) != 0);
}

TEST_CASE("cli: run executes and exports transcripts") {
  CHECK(run_cli({"run", "--algo", "secure", "--kind", "sphere", "--d", "4", "--k", "8",
                 "--instance-seed", "2", "--T", "600", "--seed", "9", "--transcript",
                 "cli_run_tr.csv", "--chloe", "cli_run_chloe.csv", "--diagnostics",
                 "cli_run_diag.json"}) == 0);
  std::ifstream tr("cli_run_tr.csv"), ch("cli_run_chloe.csv"), dg("cli_run_diag.json");
  CHECK(tr.good());
  CHECK(ch.good());
  CHECK(dg.good());
  std::string header;
  std::getline(ch, header);
  CHECK(header == "time,round,tag,vector");
  std::remove("cli_run_tr.csv");
  std::remove("cli_run_chloe.csv");
  std::remove("cli_run_diag.json");
}

TEST_CASE("cli: attack writes a coverage curve") {
  CHECK(run_cli({"attack", "--algo", "secure", "--attacker", "decomposition", "--kind", "sphere",
                 "--d", "4", "--k", "8", "--instance-seed", "4", "--T", "600", "--trials", "40",
                 "--seed", "13", "--out", "cli_attack.csv"}) == 0);
  std::ifstream in("cli_attack.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "set_size,coverage,ci_lo,ci_hi");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 8);
  std::remove("cli_attack.csv");
}
