#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "codedbai/attackers.hpp"
#include "codedbai/baselines.hpp"
#include "codedbai/errors.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/secure.hpp"
#include "codedbai/stats.hpp"

namespace codedbai {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CODEDBAI_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on a small pool. Output written by index, so
// the worker count never changes any result.
template <class Fn>
void parallel_for(long n, int workers, Fn&& fn) {
  workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, n)));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {"secure", "od_linbai", "single_round",
                                                 "single_round_uniform", "per_entry"};
  return names;
}

struct TrialOutcome {
  int declared_best = 0;
  long pulls_used = 0;
};

// One algorithm run without transcript retention; shared entry point for the
// sweep driver and the CLI.
inline TrialOutcome run_algorithm(const std::string& name, const Instance& inst, long t_budget,
                                  std::uint64_t seed, double sigma = -1.0,
                                  const Design* round1_design = nullptr) {
  if (name == "secure") {
    SecureOptions opts;
    opts.sigma = sigma;
    opts.round1_design = round1_design;
    const SecureResult r = run_secure(inst, t_budget, seed, opts);
    return {r.declared_best, r.pulls_used};
  }
  BaselineOptions opts;
  opts.sigma = sigma;
  opts.round1_design = round1_design;
  if (name == "od_linbai") {
    const AlgorithmResult r = od_linbai(inst, t_budget, seed, opts);
    return {r.declared_best, r.pulls_used};
  }
  if (name == "single_round") {
    const AlgorithmResult r = single_round(inst, t_budget, seed, SingleRoundMode::GOptimal, opts);
    return {r.declared_best, r.pulls_used};
  }
  if (name == "single_round_uniform") {
    const AlgorithmResult r = single_round(inst, t_budget, seed, SingleRoundMode::Uniform, opts);
    return {r.declared_best, r.pulls_used};
  }
  if (name == "per_entry") {
    const AlgorithmResult r = per_entry(inst, t_budget, seed, opts);
    return {r.declared_best, r.pulls_used};
  }
  throw Error("run_algorithm: unknown algorithm '" + name + "'");
}

struct SweepConfig {
  std::uint64_t master_seed = 0;
  double sigma = -1.0;  // < 0: instance noise_std
  std::vector<GeneratorSpec> instances;
  std::vector<std::string> algorithms;
  std::vector<long> t_grid;
  long trials = 0;
  int workers = 0;

  void check() const {
    if (instances.empty()) throw Error("sweep config: no instances");
    if (algorithms.empty()) throw Error("sweep config: no algorithms");
    if (trials < 1) throw Error("sweep config: trials must be >= 1");
    if (t_grid.empty()) throw Error("sweep config: empty T grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
      if (t_grid[i] <= t_grid[i - 1]) throw Error("sweep config: T grid must be strictly increasing");
  }
};

struct SweepRow {
  std::string algo;
  int d = 0;
  int k = 0;
  long t_budget = 0;
  long trials = 0;
  long errors = 0;
  double pe_hat = 0.0;
  Interval interval;
  double mean_pulls = 0.0;
  std::string note;  // failed-cell annotation, empty when clean
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

// Monte Carlo error-probability estimation over (instance, algorithm, T)
// cells. Per-trial streams are derived from (master seed, cell, trial), so
// the table is a pure function of the config.
inline SweepTable monte_carlo(const SweepConfig& config) {
  config.check();
  const int workers = resolve_workers(config.workers);
  SweepTable table;
  long cell_index = 0;
  for (const auto& spec : config.instances) {
    const Instance inst = generate(spec);
    const int true_best = hardness(inst).best_id;
    Design round1;
    bool have_round1 = false;
    for (const auto& algo : config.algorithms) {
      const Design* cached = nullptr;
      if (algo == "secure" || algo == "od_linbai" || algo == "single_round") {
        if (!have_round1) {
          round1 = g_optimal(inst.arms);
          have_round1 = true;
        }
        cached = &round1;
      }
      for (const long t_budget : config.t_grid) {
        SweepRow row;
        row.algo = algo;
        row.d = inst.dim();
        row.k = inst.num_arms();
        row.t_budget = t_budget;
        row.trials = config.trials;
        std::vector<unsigned char> wrong(static_cast<std::size_t>(config.trials), 0);
        std::vector<long> pulls(static_cast<std::size_t>(config.trials), 0);
        std::atomic<long> failures{0};
        parallel_for(config.trials, workers, [&](long trial) {
          const std::uint64_t seed = derive_seed(
              config.master_seed, {static_cast<std::uint64_t>(cell_index),
                                   static_cast<std::uint64_t>(trial)});
          try {
            const TrialOutcome outcome =
                run_algorithm(algo, inst, t_budget, seed, config.sigma, cached);
            wrong[static_cast<std::size_t>(trial)] = outcome.declared_best != true_best;
            pulls[static_cast<std::size_t>(trial)] = outcome.pulls_used;
          } catch (const std::exception&) {
            failures.fetch_add(1);
          }
        });
        if (failures.load() > 0)
          row.note = std::to_string(failures.load()) + " trials failed";
        double pull_sum = 0;
        for (long trial = 0; trial < config.trials; ++trial) {
          row.errors += wrong[static_cast<std::size_t>(trial)];
          pull_sum += static_cast<double>(pulls[static_cast<std::size_t>(trial)]);
        }
        row.pe_hat = static_cast<double>(row.errors) / static_cast<double>(row.trials);
        row.interval = wilson_interval(row.errors, row.trials);
        row.mean_pulls = pull_sum / static_cast<double>(row.trials);
        table.rows.push_back(std::move(row));
        ++cell_index;
      }
    }
  }
  return table;
}

inline const char* kSweepCsvHeader = "algo,d,K,T,trials,errors,pe_hat,ci_lo,ci_hi,mean_pulls";

inline void write_sweep_csv(const SweepTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_sweep_csv: cannot open " + path);
  out << kSweepCsvHeader << '\n';
  out.precision(12);
  for (const auto& r : table.rows) {
    out << r.algo << ',' << r.d << ',' << r.k << ',' << r.t_budget << ',' << r.trials << ','
        << r.errors << ',' << r.pe_hat << ',' << r.interval.lo << ',' << r.interval.hi << ','
        << r.mean_pulls << '\n';
  }
}

inline SweepTable read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_sweep_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("read_sweep_csv: empty file");
  if (line != kSweepCsvHeader) throw SchemaError("read_sweep_csv: unexpected header: " + line);
  SweepTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    SweepRow row;
    std::string field;
    auto next = [&] {
      if (!std::getline(ss, field, ',')) throw SchemaError("read_sweep_csv: short row: " + line);
      return field;
    };
    row.algo = next();
    row.d = std::stoi(next());
    row.k = std::stoi(next());
    row.t_budget = std::stol(next());
    row.trials = std::stol(next());
    row.errors = std::stol(next());
    row.pe_hat = std::stod(next());
    row.interval.lo = std::stod(next());
    row.interval.hi = std::stod(next());
    row.mean_pulls = std::stod(next());
    table.rows.push_back(std::move(row));
  }
  return table;
}

struct ExponentFit {
  std::string algo;
  double slope = 0.0;      // per unit T, from -ln(pe) vs T
  double intercept = 0.0;
  double slope_se = 0.0;
  int points_used = 0;
  bool rule_of_three_used = false;
  std::vector<std::pair<long, double>> zero_error_bounds;  // (T, 3/trials)
};

// Weighted least squares of -ln(pe_hat) against T, weights = error counts.
// Cells below 5 errors only contribute a rule-of-three upper bound.
inline ExponentFit fit_exponent(const SweepTable& table, const std::string& algo,
                                bool allow_rule_of_three = false) {
  std::vector<double> x, y, w;
  ExponentFit fit;
  fit.algo = algo;
  for (const auto& row : table.rows) {
    if (row.algo != algo) continue;
    if (row.errors == 0) {
      fit.zero_error_bounds.push_back({row.t_budget, rule_of_three(row.trials)});
      if (allow_rule_of_three) {
        x.push_back(static_cast<double>(row.t_budget));
        y.push_back(-std::log(rule_of_three(row.trials)));
        w.push_back(1.0);
        fit.rule_of_three_used = true;
      }
      continue;
    }
    if (row.errors < 5 && !allow_rule_of_three) continue;
    x.push_back(static_cast<double>(row.t_budget));
    y.push_back(-std::log(row.pe_hat));
    w.push_back(static_cast<double>(row.errors));
  }
  if (x.size() < 3) throw InsufficientData("fit_exponent: fewer than 3 usable cells for " + algo);
  const LineFit line = fit_weighted_line(x, y, w);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.slope_se = line.slope_se;
  fit.points_used = static_cast<int>(line.points);
  return fit;
}

}  // namespace codedbai
