#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "codedbai/environment.hpp"
#include "codedbai/errors.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/rng.hpp"
#include "codedbai/stats.hpp"

namespace codedbai {

// Matches a played vector back to an original arm id, 0 if none.
inline int match_arm(const Eigen::VectorXd& v, const std::vector<Arm>& arms, double tol = 1e-9) {
  for (const auto& a : arms) {
    const double scale = std::max(1.0, a.vec.lpNorm<Eigen::Infinity>());
    if ((v - a.vec).lpNorm<Eigen::Infinity>() <= tol * scale) return a.id;
  }
  return 0;
}

namespace detail {

// All (well, the first two) subsets of `size` arms summing to `target`,
// depth-first in id order so the first hit is lexicographically smallest.
inline void decompose_dfs(const Eigen::VectorXd& target, const std::vector<Arm>& arms,
                          std::size_t next, int remaining, Eigen::VectorXd& partial,
                          std::vector<int>& chosen, std::vector<std::vector<int>>& found,
                          double tol) {
  if (found.size() >= 2) return;
  if (remaining == 0) {
    if ((target - partial).lpNorm<Eigen::Infinity>() <= tol) found.push_back(chosen);
    return;
  }
  if (arms.size() - next < static_cast<std::size_t>(remaining)) return;
  // crude reachability bound
  double max_norm = 0.0;
  for (std::size_t i = next; i < arms.size(); ++i)
    max_norm = std::max(max_norm, arms[i].vec.lpNorm<Eigen::Infinity>());
  if ((target - partial).lpNorm<Eigen::Infinity>() > remaining * max_norm + tol) return;

  for (std::size_t i = next; i < arms.size(); ++i) {
    partial += arms[i].vec;
    chosen.push_back(arms[i].id);
    decompose_dfs(target, arms, i + 1, remaining - 1, partial, chosen, found, tol);
    chosen.pop_back();
    partial -= arms[i].vec;
    if (found.size() >= 2) return;
  }
}

inline std::vector<int> decompose_sum(const Eigen::VectorXd& target, const std::vector<Arm>& arms,
                                      int size, bool& ambiguous, double tol = 1e-6) {
  std::vector<std::vector<int>> found;
  Eigen::VectorXd partial = Eigen::VectorXd::Zero(target.size());
  std::vector<int> chosen;
  decompose_dfs(target, arms, 0, size, partial, chosen, found, tol);
  ambiguous = found.size() >= 2;
  if (found.empty()) return {};
  return found.front();
}

inline std::vector<int> distinct_vec_ids_in_round(const ChloeView& view, int round) {
  std::vector<int> ids;
  for (const auto& rec : view.records()) {
    if (rec.round != round) continue;
    if (std::find(ids.begin(), ids.end(), rec.vec_id) == ids.end()) ids.push_back(rec.vec_id);
  }
  return ids;
}

inline void append_missing(std::vector<int>& ranked, const std::vector<int>& ids) {
  for (int id : ids)
    if (std::find(ranked.begin(), ranked.end(), id) == ranked.end()) ranked.push_back(id);
}

inline std::vector<int> all_ids(const std::vector<Arm>& arms) {
  std::vector<int> ids;
  ids.reserve(arms.size());
  for (const auto& a : arms) ids.push_back(a.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Constituents of a played vector: an exact arm match, else subset-sum with
// the size implied by the round (2^{round-1}), else a power-of-two scan.
inline std::vector<int> decompose_played(const Eigen::VectorXd& v, const std::vector<Arm>& arms,
                                         int round, bool& ambiguous) {
  if (int id = match_arm(v, arms); id != 0) return {id};
  const int likely = round >= 1 ? (1 << (round - 1)) : 2;
  if (likely >= 2 && likely <= static_cast<int>(arms.size())) {
    auto members = decompose_sum(v, arms, likely, ambiguous);
    if (!members.empty()) return members;
  }
  for (int size = 2; size <= static_cast<int>(arms.size()); size *= 2) {
    if (size == likely) continue;
    bool amb = false;
    auto members = decompose_sum(v, arms, size, amb);
    ambiguous = ambiguous || amb;
    if (!members.empty()) return members;
  }
  return {};
}

}  // namespace detail

struct AttackResult {
  std::string attacker;
  std::vector<int> candidate_set;  // the attack's nominal suspects, sorted
  std::vector<int> ranked;         // full ranking, most suspicious first
  bool ambiguous = false;
};

// Pick one of the distinct vectors of the last round by fair coin. An exact
// arm match becomes the singleton guess; a coded vector falls back to a
// uniform pick among its reconstructed constituents.
inline AttackResult coin_toss_attack(const ChloeView& view, const std::vector<Arm>& arms,
                                     Rng& rng) {
  AttackResult out;
  out.attacker = "coin_toss";
  const int last = view.last_round();
  std::vector<int> finals = detail::distinct_vec_ids_in_round(view, last);
  if (finals.empty()) return out;
  rng.shuffle(finals);

  bool coin_pick = true;
  for (int vec_id : finals) {
    const Eigen::VectorXd& v = view.vec(vec_id);
    const bool exact = match_arm(v, arms) != 0;
    std::vector<int> members = detail::decompose_played(v, arms, last, out.ambiguous);
    if (!exact) rng.shuffle(members);
    if (coin_pick) {
      if (!members.empty()) out.candidate_set = {members.front()};
      coin_pick = false;
    }
    detail::append_missing(out.ranked, members);
  }
  detail::append_missing(out.ranked, detail::all_ids(arms));
  return out;
}

// Arms whose own vector was played more than t_prime times are suspicious.
inline AttackResult threshold_attack(const ChloeView& view, const std::vector<Arm>& arms,
                                     long t_prime) {
  AttackResult out;
  out.attacker = "threshold";
  std::map<int, int> vec_to_arm;
  std::map<int, long> pull_count;
  for (const auto& rec : view.records()) {
    auto it = vec_to_arm.find(rec.vec_id);
    if (it == vec_to_arm.end())
      it = vec_to_arm.insert({rec.vec_id, match_arm(view.vec(rec.vec_id), arms)}).first;
    if (it->second != 0) ++pull_count[it->second];
  }
  for (const auto& [id, count] : pull_count)
    if (count > t_prime) out.candidate_set.push_back(id);
  std::sort(out.candidate_set.begin(), out.candidate_set.end());

  std::vector<std::pair<long, int>> order;  // (-count, id)
  for (const auto& [id, count] : pull_count) order.push_back({-count, id});
  std::sort(order.begin(), order.end());
  for (const auto& [negc, id] : order) {
    (void)negc;
    out.ranked.push_back(id);
  }
  detail::append_missing(out.ranked, detail::all_ids(arms));
  return out;
}

enum class DecompositionStrategy { UnionFinal, OneSubset, Singleton };

// Worst-case probe: reconstruct the exact constituents of every final-round
// coded vector by subset-sum search, then guess per strategy.
inline AttackResult decomposition_attack(const ChloeView& view, const std::vector<Arm>& arms,
                                         DecompositionStrategy strategy, Rng& rng) {
  AttackResult out;
  out.attacker = "decomposition";
  const int last = view.last_round();
  const std::vector<int> finals = detail::distinct_vec_ids_in_round(view, last);

  std::vector<std::vector<int>> subsets;
  for (int vec_id : finals) {
    const Eigen::VectorXd& v = view.vec(vec_id);
    std::vector<int> members = detail::decompose_played(v, arms, last, out.ambiguous);
    if (!members.empty()) subsets.push_back(std::move(members));
  }
  if (subsets.empty()) {
    out.ranked = detail::all_ids(arms);
    return out;
  }

  std::vector<std::size_t> order(subsets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  switch (strategy) {
    case DecompositionStrategy::UnionFinal:
      for (const auto& s : subsets)
        out.candidate_set.insert(out.candidate_set.end(), s.begin(), s.end());
      break;
    case DecompositionStrategy::OneSubset:
      out.candidate_set = subsets[order.front()];
      break;
    case DecompositionStrategy::Singleton: {
      const auto& s = subsets[order.front()];
      out.candidate_set = {s[static_cast<std::size_t>(rng.bounded(s.size()))]};
      break;
    }
  }
  std::sort(out.candidate_set.begin(), out.candidate_set.end());

  for (std::size_t i : order) {
    std::vector<int> members = subsets[i];
    rng.shuffle(members);
    detail::append_missing(out.ranked, members);
  }
  detail::append_missing(out.ranked, detail::all_ids(arms));
  return out;
}

struct CurvePoint {
  int size = 0;
  double coverage = 0.0;
  Interval interval;
};

struct EquivocationCurve {
  std::vector<CurvePoint> points;  // sizes 1..K
  long trials = 0;

  // min log2(s) with coverage >= 1 - eps; infinity if never reached
  double equivocation(double eps) const {
    for (const auto& p : points)
      if (p.coverage >= 1.0 - eps) return std::log2(static_cast<double>(p.size));
    return std::numeric_limits<double>::infinity();
  }
};

// Coverage-versus-set-size table for a ranked attacker against an algorithm,
// over a family of instances.
template <class AlgoFn, class AttackFn>
EquivocationCurve equivocation_curve(AlgoFn&& algorithm, AttackFn&& attacker,
                                     const std::vector<Instance>& family, long trials,
                                     std::uint64_t seed) {
  if (family.empty()) throw Error("equivocation_curve: empty instance family");
  std::vector<int> best_ids;
  int max_k = 0;
  for (const auto& inst : family) {
    best_ids.push_back(hardness(inst).best_id);
    max_k = std::max(max_k, inst.num_arms());
  }

  std::vector<long> rank_histogram(static_cast<std::size_t>(max_k) + 2, 0);
  for (long trial = 0; trial < trials; ++trial) {
    const std::size_t which = static_cast<std::size_t>(trial) % family.size();
    const Instance& inst = family[which];
    const Transcript transcript = algorithm(inst, derive_seed(seed, {static_cast<std::uint64_t>(trial), 2}));
    ChloeView view(transcript);
    Rng attack_rng(derive_seed(seed, {static_cast<std::uint64_t>(trial), 3}));
    const AttackResult attack = attacker(view, inst.arms, attack_rng);
    std::size_t pos = static_cast<std::size_t>(max_k) + 1;
    for (std::size_t i = 0; i < attack.ranked.size(); ++i)
      if (attack.ranked[i] == best_ids[which]) {
        pos = i + 1;
        break;
      }
    ++rank_histogram[std::min(pos, static_cast<std::size_t>(max_k) + 1)];
  }

  EquivocationCurve curve;
  curve.trials = trials;
  long cumulative = 0;
  for (int s = 1; s <= max_k; ++s) {
    cumulative += rank_histogram[static_cast<std::size_t>(s)];
    CurvePoint p;
    p.size = s;
    p.coverage = static_cast<double>(cumulative) / static_cast<double>(trials);
    p.interval = wilson_interval(cumulative, trials);
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace codedbai
