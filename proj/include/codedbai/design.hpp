#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "codedbai/errors.hpp"
#include "codedbai/instance.hpp"

namespace codedbai {

// Orthonormal basis for the span of a set of vectors, plus their coordinates
// in that basis. Rank decided at kRankTolerance relative to the top singular
// value.
struct OrthonormalBasis {
  Eigen::MatrixXd basis;                // d x d_r, orthonormal columns
  std::vector<Eigen::VectorXd> reduced; // b_i = basis^T a_i

  int ambient_dim() const { return static_cast<int>(basis.rows()); }
  int reduced_dim() const { return static_cast<int>(basis.cols()); }
};

inline OrthonormalBasis orthonormal_basis(const std::vector<Eigen::VectorXd>& vecs) {
  if (vecs.empty()) throw Error("orthonormal_basis: empty vector set");
  const int d = static_cast<int>(vecs.front().size());
  Eigen::MatrixXd m(d, static_cast<int>(vecs.size()));
  for (int j = 0; j < static_cast<int>(vecs.size()); ++j) m.col(j) = vecs[j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[0] > 0 && sv[i] > kRankTolerance * sv[0]) ++rank;
  OrthonormalBasis out;
  out.basis = svd.matrixU().leftCols(rank);
  out.reduced.reserve(vecs.size());
  for (const auto& v : vecs) out.reduced.push_back(out.basis.transpose() * v);
  return out;
}

inline OrthonormalBasis orthonormal_basis(const std::vector<Arm>& arms) {
  std::vector<Eigen::VectorXd> vecs;
  vecs.reserve(arms.size());
  for (const auto& a : arms) vecs.push_back(a.vec);
  return orthonormal_basis(vecs);
}

// Symmetric PSD invertibility decided on the eigenvalue spread.
inline bool spd_invertible(const Eigen::MatrixXd& m, double tol = 1e-12) {
  if (m.rows() == 0 || m.rows() != m.cols()) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev.minCoeff() > tol * std::max(1.0, ev.maxCoeff());
}

// A probability design over arms with its Kiefer-Wolfowitz certificate.
struct Design {
  std::map<int, double> weights;  // arm id -> probability, support only
  Eigen::MatrixXd basis;          // d x d_r for the arms' span
  Eigen::MatrixXd info_matrix;    // V(pi) in reduced coordinates
  double g_value = 0.0;           // max_i ||b_i||^2_{V(pi)^-1}
  int reduced_dim = 0;
  double eps_kw = 0.0;
  bool converged = false;
  int iterations = 0;

  int support_size() const { return static_cast<int>(weights.size()); }
};

struct NoConvergence : Error {
  Design best;
  NoConvergence(const std::string& msg, Design b) : Error(msg), best(std::move(b)) {}
};

struct GOptimalOptions {
  double eps_kw = 1e-2;
  int max_iters = 0;  // 0 -> 10 * d_r * n
};

namespace detail {

// Greedy subset achieving full reduced rank: repeatedly take the vector with
// the largest residual against the chosen span (ties by index).
inline std::vector<int> greedy_rank_subset(const std::vector<Eigen::VectorXd>& b, int rank) {
  const int n = static_cast<int>(b.size());
  std::vector<Eigen::VectorXd> residuals(b.begin(), b.end());
  std::vector<int> chosen;
  std::vector<bool> used(n, false);
  for (int round = 0; round < rank; ++round) {
    int best = -1;
    double best_norm = 0.0;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double norm = residuals[i].norm();
      // relative tie tolerance so equal-norm candidates resolve by index
      if (norm > best_norm * (1.0 + 1e-9)) {
        best = i;
        best_norm = norm;
      }
    }
    if (best < 0 || best_norm < 1e-12) break;
    used[best] = true;
    chosen.push_back(best);
    const Eigen::VectorXd dir = residuals[best] / best_norm;
    for (int i = 0; i < n; ++i)
      if (!used[i]) residuals[i] -= dir.dot(residuals[i]) * dir;
  }
  return chosen;
}

inline Eigen::MatrixXd info_matrix(const std::vector<Eigen::VectorXd>& b,
                                   const std::vector<double>& w) {
  const int dr = static_cast<int>(b.front().size());
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dr, dr);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (w[i] > 0) v.noalias() += w[i] * b[i] * b[i].transpose();
  return v;
}

// max_i b_i^T V^-1 b_i and the argmax (ties by lowest index).
inline std::pair<double, int> g_max(const std::vector<Eigen::VectorXd>& b,
                                    const Eigen::MatrixXd& v_inv) {
  double best = -1.0;
  int arg = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double g = b[i].dot(v_inv * b[i]);
    if (g > best + 1e-15) {
      best = g;
      arg = static_cast<int>(i);
    }
  }
  return {best, arg};
}

// Carathéodory-style support reduction in symmetric-matrix space: walk along
// null directions of the moment system until the support fits d_r(d_r+1)/2.
// With more than D+1 atoms the walk preserves V and the total mass exactly;
// the final D+1 -> D step preserves V only, so the caller renormalizes and
// re-checks the certificate.
inline void caratheodory_reduce(const std::vector<Eigen::VectorXd>& b, std::vector<double>& w,
                                int dr) {
  const int cap = dr * (dr + 1) / 2;
  for (;;) {
    std::vector<int> support;
    for (int i = 0; i < static_cast<int>(w.size()); ++i)
      if (w[i] > 0) support.push_back(i);
    const int s = static_cast<int>(support.size());
    if (s <= cap) return;

    const bool keep_mass = s > cap + 1;
    const int rows = cap + (keep_mass ? 1 : 0);
    Eigen::MatrixXd a(rows, s);
    for (int c = 0; c < s; ++c) {
      const auto& bi = b[support[c]];
      int r = 0;
      for (int p = 0; p < dr; ++p)
        for (int q = p; q < dr; ++q) a(r++, c) = bi[p] * bi[q];
      if (keep_mass) a(r, c) = 1.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    Eigen::VectorXd null_dir = svd.matrixV().col(s - 1);
    if (null_dir.maxCoeff() < -null_dir.minCoeff()) null_dir = -null_dir;

    double step = std::numeric_limits<double>::infinity();
    for (int c = 0; c < s; ++c)
      if (null_dir[c] > 1e-14) step = std::min(step, w[support[c]] / null_dir[c]);
    if (!std::isfinite(step)) return;  // no positive component; cannot walk
    for (int c = 0; c < s; ++c) {
      double& wi = w[support[c]];
      wi -= step * null_dir[c];
      if (wi < 1e-14) wi = 0.0;
    }
    double total = 0.0;
    for (double wi : w) total += wi;
    if (total <= 0) return;
    for (double& wi : w) wi /= total;
  }
}

}  // namespace detail

// Frank-Wolfe maximization of log det V(pi) (D-optimal, hence G-optimal by
// Kiefer-Wolfowitz equivalence) over arms that may be rank deficient in the
// ambient space. Runs until g <= d_r (1 + eps_kw), then prunes small weights,
// refines, reduces the support if needed, and certifies at 2 eps_kw.
inline Design g_optimal(const std::vector<Arm>& arms, const GOptimalOptions& opts = {}) {
  if (arms.empty()) throw Error("g_optimal: no arms");
  if (opts.eps_kw <= 0) throw Error("g_optimal: eps_kw must be positive");
  const int n = static_cast<int>(arms.size());
  OrthonormalBasis basis = orthonormal_basis(arms);
  const int dr = basis.reduced_dim();
  const auto& b = basis.reduced;
  const int max_iters = opts.max_iters > 0 ? opts.max_iters : 10 * dr * n;

  std::vector<double> w(n, 0.0);
  const auto init = detail::greedy_rank_subset(b, dr);
  for (int idx : init) w[idx] = 1.0 / static_cast<double>(init.size());

  Eigen::MatrixXd v = detail::info_matrix(b, w);
  auto make_design = [&](double g, bool converged, int iters) {
    Design design;
    design.basis = basis.basis;
    design.info_matrix = detail::info_matrix(b, w);
    design.g_value = g;
    design.reduced_dim = dr;
    design.eps_kw = opts.eps_kw;
    design.converged = converged;
    design.iterations = iters;
    for (int i = 0; i < n; ++i)
      if (w[i] > 0) design.weights[arms[i].id] = w[i];
    return design;
  };

  const auto frank_wolfe = [&](double target_g, int budget) -> std::pair<bool, int> {
    int it = 0;
    for (; it < budget; ++it) {
      const Eigen::MatrixXd v_inv = v.ldlt().solve(Eigen::MatrixXd::Identity(dr, dr));
      const auto [g, j] = detail::g_max(b, v_inv);
      if (g <= target_g) return {true, it};
      const double step = (g / dr - 1.0) / (g - 1.0);  // exact D-optimal line search
      for (double& wi : w) wi *= (1.0 - step);
      w[j] += step;
      v = (1.0 - step) * v + step * b[j] * b[j].transpose();
    }
    return {false, it};
  };

  auto [ok, iters] = frank_wolfe(dr * (1.0 + opts.eps_kw), max_iters);
  if (!ok) {
    const Eigen::MatrixXd v_inv = v.ldlt().solve(Eigen::MatrixXd::Identity(dr, dr));
    const auto [g, j] = detail::g_max(b, v_inv);
    (void)j;
    throw NoConvergence("g_optimal: no convergence after " + std::to_string(max_iters) + " iters",
                        make_design(g, false, iters));
  }

  // Prune numerical dust, renormalize, refine. Revert a prune that would
  // break the span.
  const double threshold = 1.0 / (4.0 * dr * dr * n);
  for (int cycle = 0; cycle < 3; ++cycle) {
    std::vector<double> pruned = w;
    double total = 0.0;
    for (double& wi : pruned) {
      if (wi < threshold) wi = 0.0;
      total += wi;
    }
    if (total <= 0) break;
    for (double& wi : pruned) wi /= total;
    const Eigen::MatrixXd v_pruned = detail::info_matrix(b, pruned);
    if (!spd_invertible(v_pruned, 1e-13)) break;
    w = pruned;
    v = v_pruned;
    auto [ok2, extra] = frank_wolfe(dr * (1.0 + opts.eps_kw), std::max(50, 2 * n));
    iters += extra;
    if (ok2) break;
  }

  const int cap = dr * (dr + 1) / 2;
  int support = 0;
  for (double wi : w)
    if (wi > 0) ++support;
  if (support > cap) {
    detail::caratheodory_reduce(b, w, dr);
    v = detail::info_matrix(b, w);
  }

  const Eigen::MatrixXd v_inv = v.ldlt().solve(Eigen::MatrixXd::Identity(dr, dr));
  const auto [g_final, arg] = detail::g_max(b, v_inv);
  (void)arg;
  if (g_final > dr * (1.0 + 2.0 * opts.eps_kw))
    throw NoConvergence("g_optimal: certificate failed after support reduction",
                        make_design(g_final, false, iters));
  return make_design(g_final, true, iters);
}

// Integer pull counts per arm: ceil(m * pi(i)) over the support.
struct PullAllocation {
  std::map<int, int> counts;
  long total = 0;
};

inline PullAllocation allocate(const std::map<int, double>& weights, long m) {
  if (m < 1) throw Error("allocate: m must be >= 1");
  PullAllocation alloc;
  for (const auto& [id, wi] : weights) {
    if (wi <= 0) continue;
    const int c = static_cast<int>(std::ceil(static_cast<double>(m) * wi - 1e-12));
    alloc.counts[id] = std::max(1, c);
    alloc.total += alloc.counts[id];
  }
  return alloc;
}

inline PullAllocation allocate(const Design& design, long m) { return allocate(design.weights, m); }

// Splits exactly `total` pulls across the support, at least one each,
// remainder by largest fractional part (ties by id).
inline PullAllocation apportion(const std::map<int, double>& weights, long total) {
  const long s = static_cast<long>(weights.size());
  if (total < s) throw Error("apportion: need at least one pull per support arm");
  PullAllocation alloc;
  std::vector<std::pair<double, int>> remainders;  // (-frac, id)
  long assigned = 0;
  for (const auto& [id, wi] : weights) {
    const double ideal = static_cast<double>(total - s) * wi;
    const int base = static_cast<int>(std::floor(ideal));
    alloc.counts[id] = 1 + base;
    assigned += 1 + base;
    remainders.push_back({-(ideal - base), id});
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned)
    ++alloc.counts[remainders[i].second];
  alloc.total = total;
  return alloc;
}

// Per-round pull budget m = floor((T - min(K, d(d+1)/2) - d + 2) / log2 d).
inline long budget_m(long t_total, int k, int d) {
  const long fixed = std::min<long>(k, static_cast<long>(d) * (d + 1) / 2);
  const double log_d = std::log2(static_cast<double>(d));
  if (log_d < 1.0) throw Error("budget_m: need d >= 2");
  const double m = std::floor(static_cast<double>(t_total - fixed - d + 2) / log_d);
  if (m < 1.0)
    throw BudgetTooSmall("budget_m: T=" + std::to_string(t_total) + " too small for K=" +
                         std::to_string(k) + ", d=" + std::to_string(d));
  return static_cast<long>(m);
}

}  // namespace codedbai
