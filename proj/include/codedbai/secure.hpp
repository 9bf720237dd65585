#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "codedbai/design.hpp"
#include "codedbai/environment.hpp"
#include "codedbai/errors.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/rng.hpp"

namespace codedbai {

inline int elimination_rounds(int d) {
  int r = 0;
  while ((1 << r) < d) ++r;
  return r;  // log2(d)
}

// Round-r grouping of the d kept arms into d/2^{r-1} subsets of 2^{r-1}.
// Each subset contains exactly one currently-live arm; that is what makes
// every subset's coded vector get played, and decoding possible later.
struct MultisetPartition {
  int round = 1;
  std::vector<std::vector<int>> subsets;        // sorted ids, subsets ordered by min id
  std::vector<std::pair<int, int>> parents;     // (live, dead) indices into round r-1; empty for r=1

  int subset_of(int arm_id) const {
    for (int s = 0; s < static_cast<int>(subsets.size()); ++s)
      for (int id : subsets[s])
        if (id == arm_id) return s;
    return -1;
  }
};

inline MultisetPartition singleton_partition(std::vector<int> arm_ids) {
  std::sort(arm_ids.begin(), arm_ids.end());
  MultisetPartition m;
  m.round = 1;
  for (int id : arm_ids) m.subsets.push_back({id});
  return m;
}

// Pairs every live subset (contains a survivor) with a uniformly random dead
// one and unites them. Keeps the one-survivor-per-subset invariant.
inline MultisetPartition match_subsets(const MultisetPartition& prev,
                                       const std::vector<int>& survivors, Rng& rng) {
  std::vector<int> live, dead;
  for (int s = 0; s < static_cast<int>(prev.subsets.size()); ++s) {
    int count = 0;
    for (int id : prev.subsets[s])
      if (std::find(survivors.begin(), survivors.end(), id) != survivors.end()) ++count;
    if (count > 1)
      throw StructureViolation("match_subsets: subset with more than one survivor");
    (count == 1 ? live : dead).push_back(s);
  }
  if (live.size() != dead.size() || live.empty())
    throw StructureViolation("match_subsets: live/dead counts differ");

  rng.shuffle(dead);
  struct Merged {
    std::vector<int> ids;
    std::pair<int, int> parent;
  };
  std::vector<Merged> merged(live.size());
  for (std::size_t p = 0; p < live.size(); ++p) {
    Merged& m = merged[p];
    m.parent = {live[p], dead[p]};
    m.ids = prev.subsets[live[p]];
    m.ids.insert(m.ids.end(), prev.subsets[dead[p]].begin(), prev.subsets[dead[p]].end());
    std::sort(m.ids.begin(), m.ids.end());
  }
  std::sort(merged.begin(), merged.end(),
            [](const Merged& a, const Merged& b) { return a.ids.front() < b.ids.front(); });

  MultisetPartition next;
  next.round = prev.round + 1;
  for (auto& m : merged) {
    next.subsets.push_back(std::move(m.ids));
    next.parents.push_back(m.parent);
  }
  return next;
}

inline Eigen::VectorXd coded_vector(const std::vector<int>& subset, const Instance& inst) {
  if (subset.empty()) throw Error("coded_vector: empty subset");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(inst.dim());
  for (int id : subset) v += inst.arm(id).vec;
  return v;
}

// One decoded reward: the new coded pull minus one past pull per level,
// rounds r-1 down to 1.
struct PastRef {
  int round = 0;
  int subset = 0;  // index into that round's partition
  long t = 0;
};

struct DecodeChain {
  int target_arm = 0;
  int round = 0;
  long new_pull_t = 0;
  std::vector<PastRef> past;
};

inline double decode(const DecodeChain& chain, const Transcript& transcript) {
  if (chain.new_pull_t < 1 || chain.new_pull_t > transcript.size())
    throw MissingPull("decode: new pull not in transcript");
  double x = transcript.at_time(chain.new_pull_t).reward;
  for (const auto& ref : chain.past) {
    if (ref.t < 1 || ref.t >= chain.new_pull_t)
      throw MissingPull("decode: past pull missing or not before the new pull");
    x -= transcript.at_time(ref.t).reward;
  }
  return x;
}

// Pull-time ledger per (round, subset) with per-subset cycling counters, so
// reuse of past pulls is spread round-robin.
struct CodingLedger {
  std::vector<std::vector<std::vector<long>>> pulls;  // [round-1][subset] -> times
  std::vector<std::vector<long>> cursors;

  void start_round(std::size_t subsets) {
    pulls.emplace_back(subsets);
    cursors.emplace_back(subsets, 0);
  }

  void record(int round, int subset, long t) {
    pulls.at(round - 1).at(subset).push_back(t);
  }

  long consume(int round, int subset) {
    const auto& times = pulls.at(round - 1).at(subset);
    if (times.empty()) throw MissingPull("ledger: subset was never pulled at round " +
                                         std::to_string(round));
    long& cursor = cursors.at(round - 1).at(subset);
    const long t = times[static_cast<std::size_t>(cursor % static_cast<long>(times.size()))];
    ++cursor;
    return t;
  }
};

// Builds the decode chains for the round-r pulls of one arm. The sibling
// subset at level l is the dead half of the arm's subset at level l+1.
inline std::vector<DecodeChain> build_chains(const std::vector<MultisetPartition>& partitions,
                                             CodingLedger& ledger, int round, int arm_id,
                                             const std::vector<long>& new_pull_times) {
  std::vector<DecodeChain> chains;
  chains.reserve(new_pull_times.size());
  for (long t : new_pull_times) {
    DecodeChain chain;
    chain.target_arm = arm_id;
    chain.round = round;
    chain.new_pull_t = t;
    int subset = partitions.at(round - 1).subset_of(arm_id);
    for (int level = round - 1; level >= 1; --level) {
      const auto& part = partitions.at(level);  // partition at round level+1
      const auto [live, dead] = part.parents.at(subset);
      chain.past.push_back({level, dead, ledger.consume(level, dead)});
      subset = live;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

// Exact noise covariance of one round's decoded rewards, from the ledger:
// diagonal = chain length, off-diagonal = number of shared past pulls.
struct NoiseCovariance {
  int round = 0;
  Eigen::MatrixXd lambda;
  std::vector<double> row_sums;

  double max_row_sum() const {
    double m = 0;
    for (double r : row_sums) m = std::max(m, r);
    return m;
  }
};

inline std::vector<double> chain_row_sums(const std::vector<DecodeChain>& chains) {
  std::map<std::tuple<int, int, long>, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(chains.size()); ++i)
    for (const auto& ref : chains[i].past)
      groups[{ref.round, ref.subset, ref.t}].push_back(i);
  std::vector<double> sums(chains.size());
  for (std::size_t i = 0; i < chains.size(); ++i) sums[i] = chains[i].round;
  for (const auto& [key, members] : groups) {
    (void)key;
    for (int i : members) sums[static_cast<std::size_t>(i)] += static_cast<double>(members.size()) - 1.0;
  }
  return sums;
}

inline NoiseCovariance noise_covariance(const std::vector<DecodeChain>& chains) {
  NoiseCovariance cov;
  const int n = static_cast<int>(chains.size());
  cov.round = chains.empty() ? 0 : chains.front().round;
  cov.lambda = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) cov.lambda(i, i) = static_cast<double>(chains[i].round);
  std::map<std::tuple<int, int, long>, std::vector<int>> groups;
  for (int i = 0; i < n; ++i)
    for (const auto& ref : chains[i].past)
      groups[{ref.round, ref.subset, ref.t}].push_back(i);
  for (const auto& [key, members] : groups) {
    (void)key;
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        cov.lambda(members[a], members[b]) += 1.0;
        cov.lambda(members[b], members[a]) += 1.0;
      }
  }
  cov.row_sums.resize(n);
  for (int i = 0; i < n; ++i) cov.row_sums[static_cast<std::size_t>(i)] = cov.lambda.row(i).sum();
  return cov;
}

// Least squares in the survivors' span: V_r and theta_hat live in reduced
// coordinates, reward estimates come back per arm.
struct EstimationState {
  int round = 0;
  std::vector<int> arm_ids;
  OrthonormalBasis basis;
  Eigen::MatrixXd v;
  Eigen::VectorXd theta_hat;
  std::map<int, double> phat;
};

inline EstimationState estimate(int round, const std::vector<int>& arm_ids, const Instance& inst,
                                const std::map<int, int>& counts,
                                const std::vector<std::pair<int, double>>& rewards) {
  EstimationState state;
  state.round = round;
  state.arm_ids = arm_ids;
  std::vector<Eigen::VectorXd> vecs;
  std::map<int, int> index_of;
  vecs.reserve(arm_ids.size());
  for (int id : arm_ids) {
    index_of[id] = static_cast<int>(vecs.size());
    vecs.push_back(inst.arm(id).vec);
  }
  state.basis = orthonormal_basis(vecs);
  const int dr = state.basis.reduced_dim();
  state.v = Eigen::MatrixXd::Zero(dr, dr);
  for (const auto& [id, count] : counts) {
    const auto& b = state.basis.reduced.at(static_cast<std::size_t>(index_of.at(id)));
    state.v.noalias() += static_cast<double>(count) * b * b.transpose();
  }
  if (!spd_invertible(state.v)) throw SingularV("estimate: V_r is singular in the reduced space");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(state.v);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dr);
  for (const auto& [id, x] : rewards)
    rhs.noalias() += x * state.basis.reduced.at(static_cast<std::size_t>(index_of.at(id)));
  state.theta_hat = ldlt.solve(rhs);
  for (int id : arm_ids)
    state.phat[id] = state.basis.reduced.at(static_cast<std::size_t>(index_of.at(id))).dot(state.theta_hat);
  return state;
}

inline std::vector<int> best_arms(const std::map<int, double>& phat, const std::vector<int>& ids,
                                  int k) {
  std::vector<int> order = ids;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double pa = phat.at(a), pb = phat.at(b);
    if (pa != pb) return pa > pb;
    return a < b;  // deterministic tie-break
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

enum class DummyPolicy { SeededUniform, HighestWeight };
enum class AllocationMode { DesignCeil, UniformPerArm };

struct SecureOptions {
  double sigma = -1.0;  // < 0: use the instance's noise_std
  DummyPolicy dummy_policy = DummyPolicy::SeededUniform;
  AllocationMode alloc_mode = AllocationMode::DesignCeil;
  // UniformPerArm: pulls per arm per round (diagnostic mode; bypasses m, the
  // caller supplies a budget that covers support*n + n*(d-2+...) pulls)
  int uniform_pulls = 1;
  GOptimalOptions design;
  const Design* round1_design = nullptr;  // optional precomputed design for A_0
  bool keep_decoded = false;
  bool keep_chains = false;
};

struct RoundInfo {
  int round = 0;
  long pulls = 0;
  std::map<int, int> allocation;
  double lambda_max_row_sum = 0.0;  // rounds >= 2
  double lambda_min_row_sum = 0.0;
  std::vector<int> survivors_after;
};

struct SecureResult {
  int declared_best = 0;
  Transcript transcript;
  long pulls_used = 0;
  long budget = 0;
  long m = 0;
  std::vector<int> dummies;                   // A_c
  std::vector<std::vector<int>> survivors;    // A_1 .. A_log d
  std::vector<MultisetPartition> partitions;  // M_1 .. M_log d
  std::vector<RoundInfo> rounds;
  std::vector<std::vector<std::pair<int, double>>> decoded_by_round;  // [r-2]
  std::vector<std::vector<DecodeChain>> chains_by_round;              // [r-2]
};

// Algorithm: round 1 plays a G-optimal design uncoded over all arms and keeps
// the best d/2 plus d/2 dummies from the round-1 support; every later round
// merges subsets pairwise at random, plays each merged subset's sum, decodes,
// re-estimates in the survivors' span, and halves the candidate set.
inline SecureResult run_secure(const Instance& inst, long t_budget, std::uint64_t seed,
                               const SecureOptions& opts = {}) {
  const auto report = validate(inst);
  if (!report.ok()) throw InstanceInvalid("run_secure: instance fails validation");
  const int d = inst.dim();
  const int k = inst.num_arms();
  const int total_rounds = elimination_rounds(d);

  SecureResult result;
  result.budget = t_budget;
  const bool uniform = opts.alloc_mode == AllocationMode::UniformPerArm;
  result.m = uniform ? 0 : budget_m(t_budget, k, d);

  Environment env(inst, t_budget, derive_seed(seed, {0}));
  if (opts.sigma >= 0) env.set_sigma(opts.sigma);
  Rng decisions(derive_seed(seed, {1}));

  // ---- round 1, uncoded ----
  Design round1_design =
      opts.round1_design ? *opts.round1_design : g_optimal(inst.arms, opts.design);
  std::map<int, int> counts1;
  if (uniform) {
    for (const auto& [id, w] : round1_design.weights) {
      (void)w;
      counts1[id] = opts.uniform_pulls;
    }
  } else {
    counts1 = allocate(round1_design, result.m).counts;
  }

  CodingLedger ledger;
  std::vector<std::pair<int, double>> round1_rewards;
  std::vector<int> all_ids(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) all_ids[static_cast<std::size_t>(i)] = i + 1;

  std::map<int, std::vector<long>> round1_times;
  for (const auto& [id, count] : counts1) {
    const int vec_id = env.intern(inst.arm(id).vec);
    for (int c = 0; c < count; ++c) {
      const double x = env.pull(vec_id, 1, {PullTag::Uncoded, id});
      round1_rewards.push_back({id, x});
      round1_times[id].push_back(env.transcript().size());
    }
  }
  EstimationState est1 = estimate(1, all_ids, inst, counts1, round1_rewards);
  std::vector<int> survivors = best_arms(est1.phat, all_ids, d / 2);
  result.survivors.push_back(survivors);

  // Dummies come from the round-1 support minus the survivors; the support
  // spans R^d so there are always at least d/2 to choose from.
  std::vector<int> pool;
  for (const auto& [id, w] : round1_design.weights) {
    (void)w;
    if (!std::binary_search(survivors.begin(), survivors.end(), id)) pool.push_back(id);
  }
  if (static_cast<int>(pool.size()) < d / 2)
    throw StructureViolation("run_secure: insufficient dummies in round-1 support");
  std::vector<int> dummies;
  if (opts.dummy_policy == DummyPolicy::HighestWeight) {
    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
      const double wa = round1_design.weights.at(a), wb = round1_design.weights.at(b);
      if (wa != wb) return wa > wb;
      return a < b;
    });
    dummies.assign(pool.begin(), pool.begin() + d / 2);
  } else {
    decisions.shuffle(pool);
    dummies.assign(pool.begin(), pool.begin() + d / 2);
  }
  std::sort(dummies.begin(), dummies.end());
  result.dummies = dummies;

  std::vector<int> kept = survivors;
  kept.insert(kept.end(), dummies.begin(), dummies.end());
  MultisetPartition m_current = singleton_partition(kept);
  ledger.start_round(m_current.subsets.size());
  for (int s = 0; s < static_cast<int>(m_current.subsets.size()); ++s) {
    const int id = m_current.subsets[s].front();
    if (auto it = round1_times.find(id); it != round1_times.end())
      for (long t : it->second) ledger.record(1, s, t);
  }
  result.partitions.push_back(m_current);

  RoundInfo info1;
  info1.round = 1;
  info1.pulls = env.pulls_used();
  info1.allocation = counts1;
  info1.survivors_after = survivors;
  result.rounds.push_back(info1);

  // ---- rounds 2 .. log d, coded ----
  std::vector<MultisetPartition>& partitions = result.partitions;
  for (int r = 2; r <= total_rounds; ++r) {
    const long pulls_before = env.pulls_used();
    std::vector<Arm> survivor_arms;
    for (int id : survivors) survivor_arms.push_back(inst.arm(id));
    const Design design_r = g_optimal(survivor_arms, opts.design);

    std::map<int, int> counts;
    if (uniform) {
      for (int id : survivors) counts[id] = opts.uniform_pulls;
    } else {
      counts = allocate(design_r, result.m).counts;
      for (int id : survivors)
        if (!counts.count(id)) counts[id] = 1;  // keep every subset played, decodability
    }

    m_current = match_subsets(partitions.back(), survivors, decisions);
    partitions.push_back(m_current);
    ledger.start_round(m_current.subsets.size());

    std::vector<DecodeChain> chains;
    std::vector<std::pair<int, double>> decoded;
    for (int id : survivors) {
      const int s = m_current.subset_of(id);
      const int vec_id = env.intern(coded_vector(m_current.subsets[static_cast<std::size_t>(s)], inst));
      std::vector<long> times;
      for (int c = 0; c < counts.at(id); ++c) {
        env.pull(vec_id, r, {PullTag::Coded, s});
        const long t = env.transcript().size();
        times.push_back(t);
        ledger.record(r, s, t);
      }
      auto arm_chains = build_chains(partitions, ledger, r, id, times);
      for (auto& chain : arm_chains) {
        decoded.push_back({id, decode(chain, env.transcript())});
        chains.push_back(std::move(chain));
      }
    }

    EstimationState est = estimate(r, survivors, inst, counts, decoded);
    survivors = best_arms(est.phat, survivors, d >> r);
    result.survivors.push_back(survivors);

    RoundInfo info;
    info.round = r;
    info.pulls = env.pulls_used() - pulls_before;
    info.allocation = counts;
    const auto sums = chain_row_sums(chains);
    info.lambda_max_row_sum = sums.empty() ? 0 : *std::max_element(sums.begin(), sums.end());
    info.lambda_min_row_sum = sums.empty() ? 0 : *std::min_element(sums.begin(), sums.end());
    info.survivors_after = survivors;
    result.rounds.push_back(info);
    if (opts.keep_decoded) result.decoded_by_round.push_back(std::move(decoded));
    if (opts.keep_chains) result.chains_by_round.push_back(std::move(chains));
  }

  if (survivors.size() != 1)
    throw StructureViolation("run_secure: elimination did not reach a single arm");
  result.declared_best = survivors.front();
  result.pulls_used = env.pulls_used();
  result.transcript = env.take_transcript();
  return result;
}

}  // namespace codedbai
