#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "codedbai/attackers.hpp"
#include "codedbai/baselines.hpp"
#include "codedbai/harness.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/io.hpp"
#include "codedbai/secure.hpp"

namespace codedbai {

namespace cli_detail {

struct InstanceArgs {
  std::string file;
  std::string kind = "sphere";
  int d = 8;
  int k = 16;
  std::uint64_t seed = 1;
  double noise_std = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--instance", file, "instance JSON file");
    cmd->add_option("--kind", kind, "generator kind: sphere | basis_plus")
        ->check(CLI::IsMember({"sphere", "basis_plus"}));
    cmd->add_option("--d", d, "dimension (power of two)");
    cmd->add_option("--k", k, "number of arms (> d)");
    cmd->add_option("--instance-seed", seed, "generator seed");
    cmd->add_option("--noise-std", noise_std, "noise standard deviation");
  }

  Instance make() const {
    if (!file.empty()) return read_instance(file);
    GeneratorSpec spec;
    spec.kind = kind == "basis_plus" ? GeneratorKind::BasisPlus : GeneratorKind::Sphere;
    spec.d = d;
    spec.k = k;
    spec.seed = seed;
    spec.noise_std = noise_std;
    return generate(spec);
  }
};

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec spec;
  const std::string kind = j.value("kind", "sphere");
  if (kind == "sphere")
    spec.kind = GeneratorKind::Sphere;
  else if (kind == "basis_plus")
    spec.kind = GeneratorKind::BasisPlus;
  else if (kind == "explicit")
    spec.kind = GeneratorKind::Explicit;
  else
    throw SchemaError("config: unknown generator kind '" + kind + "'");
  spec.d = j.value("d", 0);
  spec.k = j.value("k", 0);
  spec.seed = j.value("seed", 0ULL);
  spec.noise_std = j.value("noise_std", 1.0);
  spec.path = j.value("path", std::string());
  return spec;
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig config;
  config.sigma = j.value("sigma", -1.0);
  if (!j.contains("instances") || !j.at("instances").is_array())
    throw SchemaError("config: 'instances' array required");
  for (const auto& spec : j.at("instances"))
    config.instances.push_back(generator_spec_from_json(spec));
  if (!j.contains("algorithms")) throw SchemaError("config: 'algorithms' required");
  for (const auto& a : j.at("algorithms")) config.algorithms.push_back(a.get<std::string>());
  if (!j.contains("t_grid")) throw SchemaError("config: 't_grid' required");
  for (const auto& t : j.at("t_grid")) config.t_grid.push_back(t.get<long>());
  config.trials = j.value("trials", 0L);
  config.workers = j.value("workers", 0);
  config.master_seed = j.value("seed", 0ULL);
  return config;
}

inline Transcript run_for_transcript(const std::string& algo, const Instance& inst, long t_budget,
                                     std::uint64_t seed, double sigma) {
  if (algo == "secure") {
    SecureOptions opts;
    opts.sigma = sigma;
    return run_secure(inst, t_budget, seed, opts).transcript;
  }
  BaselineOptions opts;
  opts.sigma = sigma;
  if (algo == "od_linbai") return od_linbai(inst, t_budget, seed, opts).transcript;
  if (algo == "single_round")
    return single_round(inst, t_budget, seed, SingleRoundMode::GOptimal, opts).transcript;
  if (algo == "single_round_uniform")
    return single_round(inst, t_budget, seed, SingleRoundMode::Uniform, opts).transcript;
  if (algo == "per_entry") return per_entry(inst, t_budget, seed, opts).transcript;
  throw Error("unknown algorithm '" + algo + "'");
}

}  // namespace cli_detail

// Entry point shared by the binary and the tests. argv excludes the program
// name. Returns a process exit code.
inline int run_cli(const std::vector<std::string>& argv) {
  CLI::App app{"coded best-arm identification simulator"};
  app.require_subcommand(1);

  // --- run ---
  auto* cmd_run = app.add_subcommand("run", "run one algorithm once");
  cli_detail::InstanceArgs run_inst;
  run_inst.attach(cmd_run);
  std::string run_algo = "secure";
  long run_t = 0;
  std::uint64_t run_seed = 0;
  double run_sigma = -1.0;
  std::string run_transcript, run_chloe, run_diag;
  cmd_run->add_option("--algo", run_algo, "algorithm")->check(CLI::IsMember(known_algorithms()));
  cmd_run->add_option("--T", run_t, "pull budget")->required();
  cmd_run->add_option("--seed", run_seed, "run seed")->required();
  cmd_run->add_option("--sigma", run_sigma, "noise std override");
  cmd_run->add_option("--transcript", run_transcript, "write full transcript CSV here");
  cmd_run->add_option("--chloe", run_chloe, "write reward-free transcript CSV here");
  cmd_run->add_option("--diagnostics", run_diag, "write diagnostics JSON here (secure only)");

  // --- design ---
  auto* cmd_design = app.add_subcommand("design", "G-optimal design for an instance");
  cli_detail::InstanceArgs design_inst;
  design_inst.attach(cmd_design);
  double design_eps = 1e-2;
  cmd_design->add_option("--eps", design_eps, "Kiefer-Wolfowitz gap");

  // --- sweep ---
  auto* cmd_sweep = app.add_subcommand("sweep", "Monte Carlo error-probability sweep");
  std::string sweep_config_path, sweep_out;
  std::uint64_t sweep_seed = 0;
  long sweep_trials_override = 0;
  int sweep_workers_override = -1;
  cmd_sweep->add_option("--config", sweep_config_path, "sweep config JSON")->required();
  cmd_sweep->add_option("--out", sweep_out, "output CSV path")->required();
  cmd_sweep->add_option("--seed", sweep_seed, "master seed")->required();
  cmd_sweep->add_option("--trials", sweep_trials_override, "override trials per cell");
  cmd_sweep->add_option("--workers", sweep_workers_override, "override worker count");

  // --- attack ---
  auto* cmd_attack = app.add_subcommand("attack", "copycat attack coverage curve");
  cli_detail::InstanceArgs attack_inst;
  attack_inst.attach(cmd_attack);
  std::string attack_algo = "secure", attacker = "decomposition", attack_out;
  std::string attack_strategy = "subset";
  long attack_t = 0, attack_trials = 200, attack_tprime = -1;
  std::uint64_t attack_seed = 0;
  double attack_sigma = -1.0;
  cmd_attack->add_option("--algo", attack_algo, "algorithm under attack")
      ->check(CLI::IsMember(known_algorithms()));
  cmd_attack->add_option("--attacker", attacker, "coin_toss | threshold | decomposition")
      ->check(CLI::IsMember({"coin_toss", "threshold", "decomposition"}));
  cmd_attack->add_option("--strategy", attack_strategy, "decomposition strategy: union | subset | singleton")
      ->check(CLI::IsMember({"union", "subset", "singleton"}));
  cmd_attack->add_option("--T", attack_t, "pull budget")->required();
  cmd_attack->add_option("--trials", attack_trials, "number of attacked runs");
  cmd_attack->add_option("--t-prime", attack_tprime, "threshold attack cutoff (default m/2)");
  cmd_attack->add_option("--seed", attack_seed, "master seed")->required();
  cmd_attack->add_option("--sigma", attack_sigma, "noise std override");
  cmd_attack->add_option("--out", attack_out, "output CSV path")->required();

  // --- fit ---
  auto* cmd_fit = app.add_subcommand("fit", "exponent fit from a sweep CSV");
  std::string fit_in, fit_algo;
  bool fit_rule3 = false;
  cmd_fit->add_option("--in", fit_in, "sweep CSV")->required();
  cmd_fit->add_option("--algo", fit_algo, "algorithm name")->required();
  cmd_fit->add_flag("--rule-of-three", fit_rule3, "include zero-error cells as upper bounds");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (cmd_run->parsed()) {
      const Instance inst = run_inst.make();
      const int true_best = hardness(inst).best_id;
      if (run_algo == "secure") {
        SecureOptions opts;
        opts.sigma = run_sigma;
        const SecureResult result = run_secure(inst, run_t, run_seed, opts);
        nlohmann::json j = algorithm_result_json("secure", result.declared_best,
                                                 result.pulls_used, result.budget, result.survivors);
        j["true_best"] = true_best;
        std::cout << j.dump(2) << '\n';
        if (!run_transcript.empty()) export_transcript_csv(result.transcript, run_transcript, false);
        if (!run_chloe.empty()) export_transcript_csv(result.transcript, run_chloe, true);
        if (!run_diag.empty()) {
          std::ofstream out(run_diag);
          out << diagnostics_json(result).dump(2) << '\n';
        }
      } else {
        BaselineOptions opts;
        opts.sigma = run_sigma;
        AlgorithmResult result;
        if (run_algo == "od_linbai")
          result = od_linbai(inst, run_t, run_seed, opts);
        else if (run_algo == "single_round")
          result = single_round(inst, run_t, run_seed, SingleRoundMode::GOptimal, opts);
        else if (run_algo == "single_round_uniform")
          result = single_round(inst, run_t, run_seed, SingleRoundMode::Uniform, opts);
        else
          result = per_entry(inst, run_t, run_seed, opts);
        nlohmann::json j = algorithm_result_json(run_algo, result.declared_best, result.pulls_used,
                                                 result.budget, result.survivors);
        j["true_best"] = true_best;
        std::cout << j.dump(2) << '\n';
        if (!run_transcript.empty()) export_transcript_csv(result.transcript, run_transcript, false);
        if (!run_chloe.empty()) export_transcript_csv(result.transcript, run_chloe, true);
      }
      return 0;
    }

    if (cmd_design->parsed()) {
      const Instance inst = design_inst.make();
      GOptimalOptions opts;
      opts.eps_kw = design_eps;
      const Design design = g_optimal(inst.arms, opts);
      std::cout << design_json(design).dump(2) << '\n';
      return 0;
    }

    if (cmd_sweep->parsed()) {
      std::ifstream in(sweep_config_path);
      if (!in) throw Error("sweep: cannot open config " + sweep_config_path);
      nlohmann::json j;
      in >> j;
      SweepConfig config = cli_detail::sweep_config_from_json(j);
      config.master_seed = sweep_seed;
      if (sweep_trials_override > 0) config.trials = sweep_trials_override;
      if (sweep_workers_override >= 0) config.workers = sweep_workers_override;
      const SweepTable table = monte_carlo(config);
      write_sweep_csv(table, sweep_out);
      std::cerr << "wrote " << table.rows.size() << " rows to " << sweep_out << '\n';
      return 0;
    }

    if (cmd_attack->parsed()) {
      const Instance inst = attack_inst.make();
      long t_prime = attack_tprime;
      if (attacker == "threshold" && t_prime < 0)
        t_prime = budget_m(attack_t, inst.num_arms(), inst.dim()) / 2;
      DecompositionStrategy strategy = DecompositionStrategy::OneSubset;
      if (attack_strategy == "union") strategy = DecompositionStrategy::UnionFinal;
      if (attack_strategy == "singleton") strategy = DecompositionStrategy::Singleton;

      auto algo_fn = [&](const Instance& i, std::uint64_t s) {
        return cli_detail::run_for_transcript(attack_algo, i, attack_t, s, attack_sigma);
      };
      auto attack_fn = [&](const ChloeView& view, const std::vector<Arm>& arms, Rng& rng) {
        if (attacker == "coin_toss") return coin_toss_attack(view, arms, rng);
        if (attacker == "threshold") return threshold_attack(view, arms, t_prime);
        return decomposition_attack(view, arms, strategy, rng);
      };
      const EquivocationCurve curve =
          equivocation_curve(algo_fn, attack_fn, {inst}, attack_trials, attack_seed);
      std::ofstream out(attack_out);
      if (!out) throw Error("attack: cannot open " + attack_out);
      out << "set_size,coverage,ci_lo,ci_hi\n";
      out.precision(12);
      for (const auto& p : curve.points)
        out << p.size << ',' << p.coverage << ',' << p.interval.lo << ',' << p.interval.hi << '\n';
      std::cerr << "wrote coverage curve to " << attack_out << '\n';
      return 0;
    }

    if (cmd_fit->parsed()) {
      const SweepTable table = read_sweep_csv(fit_in);
      const ExponentFit fit = fit_exponent(table, fit_algo, fit_rule3);
      nlohmann::json j;
      j["algo"] = fit.algo;
      j["slope"] = fit.slope;
      j["intercept"] = fit.intercept;
      j["slope_se"] = fit.slope_se;
      j["points_used"] = fit.points_used;
      j["rule_of_three_used"] = fit.rule_of_three_used;
      nlohmann::json bounds = nlohmann::json::array();
      for (const auto& [t, bound] : fit.zero_error_bounds)
        bounds.push_back({{"T", t}, {"pe_upper", bound}});
      j["zero_error_bounds"] = std::move(bounds);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace codedbai
