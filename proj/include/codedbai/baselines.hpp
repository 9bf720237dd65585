#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "codedbai/design.hpp"
#include "codedbai/environment.hpp"
#include "codedbai/errors.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/secure.hpp"

namespace codedbai {

struct AlgorithmResult {
  int declared_best = 0;
  Transcript transcript;
  long pulls_used = 0;
  long budget = 0;
  std::vector<std::vector<int>> survivors;  // per round, elimination algorithms only
};

struct BaselineOptions {
  double sigma = -1.0;  // < 0: instance noise_std
  GOptimalOptions design;
  const Design* round1_design = nullptr;
};

// Successive-halving elimination with G-optimal designs, no coding. Plays the
// full-dimension projections B_r B_r^T a(i) while estimating in the reduced
// space spanned by the surviving arms.
inline AlgorithmResult od_linbai(const Instance& inst, long t_budget, std::uint64_t seed,
                                 const BaselineOptions& opts = {}) {
  const auto report = validate(inst);
  if (!report.ok()) throw InstanceInvalid("od_linbai: instance fails validation");
  const int d = inst.dim();
  const int k = inst.num_arms();
  const long m = budget_m(t_budget, k, d);
  const int total_rounds = elimination_rounds(d);

  Environment env(inst, t_budget, derive_seed(seed, {0}));
  if (opts.sigma >= 0) env.set_sigma(opts.sigma);

  AlgorithmResult result;
  result.budget = t_budget;
  std::vector<int> survivors(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) survivors[static_cast<std::size_t>(i)] = i + 1;

  for (int r = 1; r <= total_rounds; ++r) {
    std::vector<Arm> arms;
    for (int id : survivors) arms.push_back(inst.arm(id));

    OrthonormalBasis basis;
    if (r == 1) {
      basis.basis = Eigen::MatrixXd::Identity(d, d);
      for (const auto& a : arms) basis.reduced.push_back(a.vec);
    } else {
      basis = orthonormal_basis(arms);
    }

    Design design;
    if (r == 1 && opts.round1_design) {
      design = *opts.round1_design;
    } else {
      std::vector<Arm> reduced_arms;
      for (std::size_t i = 0; i < arms.size(); ++i)
        reduced_arms.push_back({arms[i].id, basis.reduced[i]});
      design = g_optimal(reduced_arms, opts.design);
    }
    const PullAllocation alloc = allocate(design, m);

    std::map<int, int> index_of;
    for (std::size_t i = 0; i < arms.size(); ++i) index_of[arms[i].id] = static_cast<int>(i);

    std::vector<std::pair<int, double>> rewards;
    for (const auto& [id, count] : alloc.counts) {
      const auto& b = basis.reduced[static_cast<std::size_t>(index_of.at(id))];
      const int vec_id = env.intern(r == 1 ? inst.arm(id).vec : (basis.basis * b).eval());
      for (int c = 0; c < count; ++c)
        rewards.push_back({id, env.pull(vec_id, r, {PullTag::Uncoded, id})});
    }

    const int dr = basis.reduced_dim();
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dr, dr);
    for (const auto& [id, count] : alloc.counts) {
      const auto& b = basis.reduced[static_cast<std::size_t>(index_of.at(id))];
      v.noalias() += static_cast<double>(count) * b * b.transpose();
    }
    if (!spd_invertible(v)) throw SingularV("od_linbai: singular V_r");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dr);
    for (const auto& [id, x] : rewards)
      rhs.noalias() += x * basis.reduced[static_cast<std::size_t>(index_of.at(id))];
    const Eigen::VectorXd theta_hat = ldlt.solve(rhs);

    std::map<int, double> phat;
    for (int id : survivors)
      phat[id] = basis.reduced[static_cast<std::size_t>(index_of.at(id))].dot(theta_hat);
    survivors = best_arms(phat, survivors, d >> r);
    result.survivors.push_back(survivors);
  }

  result.declared_best = survivors.front();
  result.pulls_used = env.pulls_used();
  result.transcript = env.take_transcript();
  return result;
}

enum class SingleRoundMode { GOptimal, Uniform };

inline Design uniform_design(const std::vector<Arm>& arms) {
  Design design;
  OrthonormalBasis basis = orthonormal_basis(arms);
  design.basis = basis.basis;
  design.reduced_dim = basis.reduced_dim();
  const double w = 1.0 / static_cast<double>(arms.size());
  std::vector<double> weights(arms.size(), w);
  for (const auto& a : arms) design.weights[a.id] = w;
  design.info_matrix = Eigen::MatrixXd::Zero(design.reduced_dim, design.reduced_dim);
  for (const auto& b : basis.reduced) design.info_matrix.noalias() += w * b * b.transpose();
  const Eigen::MatrixXd v_inv =
      design.info_matrix.ldlt().solve(Eigen::MatrixXd::Identity(design.reduced_dim, design.reduced_dim));
  for (const auto& b : basis.reduced) design.g_value = std::max(design.g_value, b.dot(v_inv * b));
  design.converged = true;
  return design;
}

// All T pulls in one non-adaptive round; the played sequence depends only on
// the arm set, never on theta*.
inline AlgorithmResult single_round(const Instance& inst, long t_budget, std::uint64_t seed,
                                    SingleRoundMode mode = SingleRoundMode::GOptimal,
                                    const BaselineOptions& opts = {}) {
  const auto report = validate(inst);
  if (!report.ok()) throw InstanceInvalid("single_round: instance fails validation");
  const int k = inst.num_arms();

  Design design;
  if (mode == SingleRoundMode::Uniform) {
    design = uniform_design(inst.arms);
  } else {
    design = opts.round1_design ? *opts.round1_design : g_optimal(inst.arms, opts.design);
  }
  if (t_budget < design.support_size())
    throw BudgetTooSmall("single_round: T smaller than the design support");
  const PullAllocation alloc = apportion(design.weights, t_budget);

  Environment env(inst, t_budget, derive_seed(seed, {0}));
  if (opts.sigma >= 0) env.set_sigma(opts.sigma);

  std::vector<std::pair<int, double>> rewards;
  for (const auto& [id, count] : alloc.counts) {
    const int vec_id = env.intern(inst.arm(id).vec);
    for (int c = 0; c < count; ++c)
      rewards.push_back({id, env.pull(vec_id, 1, {PullTag::Uncoded, id})});
  }

  std::vector<int> all_ids(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) all_ids[static_cast<std::size_t>(i)] = i + 1;
  const EstimationState est = estimate(1, all_ids, inst, alloc.counts, rewards);

  AlgorithmResult result;
  result.budget = t_budget;
  result.declared_best = best_arms(est.phat, all_ids, 1).front();
  result.pulls_used = env.pulls_used();
  result.transcript = env.take_transcript();
  return result;
}

// Estimates each coordinate of theta* separately by playing the unit vectors
// floor(T/d) times each; the reward law only depends on the played vector, so
// the unit vectors stand in for the arm combinations that realize them.
inline AlgorithmResult per_entry(const Instance& inst, long t_budget, std::uint64_t seed,
                                 const BaselineOptions& opts = {}) {
  const auto report = validate(inst);
  if (!report.ok()) throw InstanceInvalid("per_entry: instance fails validation");
  const int d = inst.dim();
  if (t_budget < d) throw BudgetTooSmall("per_entry: need T >= d");
  const long per_coord = t_budget / d;

  Environment env(inst, t_budget, derive_seed(seed, {0}));
  if (opts.sigma >= 0) env.set_sigma(opts.sigma);

  Eigen::VectorXd theta_hat(d);
  for (int i = 0; i < d; ++i) {
    const int vec_id = env.intern(Eigen::VectorXd::Unit(d, i));
    double sum = 0.0;
    for (long c = 0; c < per_coord; ++c) sum += env.pull(vec_id, 1, {PullTag::Coded, i + 1});
    theta_hat[i] = sum / static_cast<double>(per_coord);
  }

  std::map<int, double> phat;
  std::vector<int> all_ids(static_cast<std::size_t>(inst.num_arms()));
  for (int i = 0; i < inst.num_arms(); ++i) {
    all_ids[static_cast<std::size_t>(i)] = i + 1;
    phat[i + 1] = inst.arms[static_cast<std::size_t>(i)].vec.dot(theta_hat);
  }

  AlgorithmResult result;
  result.budget = t_budget;
  result.declared_best = best_arms(phat, all_ids, 1).front();
  result.pulls_used = env.pulls_used();
  result.transcript = env.take_transcript();
  return result;
}

}  // namespace codedbai
