#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "codedbai/errors.hpp"
#include "codedbai/rng.hpp"

namespace codedbai {

struct Arm {
  int id = 0;  // 1-based, unique within an instance
  Eigen::VectorXd vec;
};

// A bandit problem: K arms in R^d, hidden parameter, Gaussian noise level.
struct Instance {
  std::vector<Arm> arms;
  Eigen::VectorXd theta_star;
  double noise_std = 1.0;

  int dim() const { return static_cast<int>(theta_star.size()); }
  int num_arms() const { return static_cast<int>(arms.size()); }

  const Arm& arm(int id) const { return arms.at(static_cast<std::size_t>(id - 1)); }

  double reward_mean(int id) const { return arm(id).vec.dot(theta_star); }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline constexpr double kRankTolerance = 1e-10;

inline int numeric_rank(const std::vector<Arm>& arms, int d, double tol = kRankTolerance) {
  if (arms.empty()) return 0;
  Eigen::MatrixXd m(d, static_cast<int>(arms.size()));
  for (int j = 0; j < static_cast<int>(arms.size()); ++j) m.col(j) = arms[j].vec;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * sv[0]) ++rank;
  return rank;
}

struct ValidationIssue {
  std::string check;
  std::string detail;
  std::vector<int> offenders;  // arm ids where applicable
};

struct ValidationReport {
  bool unique_vectors = true;
  bool spans = true;
  bool k_gt_d = true;
  bool d_power_of_two = true;
  bool finite = true;
  std::vector<ValidationIssue> issues;

  bool ok() const { return unique_vectors && spans && k_gt_d && d_power_of_two && finite; }
};

inline ValidationReport validate(const Instance& inst) {
  ValidationReport report;
  const int d = inst.dim();
  const int k = inst.num_arms();

  for (const auto& a : inst.arms) {
    if (!a.vec.allFinite() || a.vec.size() != d) {
      report.finite = false;
      report.issues.push_back({"finite", "arm vector has wrong size or non-finite entries", {a.id}});
    }
  }
  if (!inst.theta_star.allFinite()) {
    report.finite = false;
    report.issues.push_back({"finite", "theta_star has non-finite entries", {}});
  }

  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double scale = std::max(1.0, inst.arms[i].vec.norm());
      if ((inst.arms[i].vec - inst.arms[j].vec).lpNorm<Eigen::Infinity>() < 1e-12 * scale) {
        report.unique_vectors = false;
        report.issues.push_back(
            {"unique", "duplicate arm vectors", {inst.arms[i].id, inst.arms[j].id}});
      }
    }
  }

  if (report.finite) {
    const int rank = numeric_rank(inst.arms, d);
    if (rank < d) {
      report.spans = false;
      report.issues.push_back({"span", "arm set has rank " + std::to_string(rank) + " < d", {}});
    }
  }

  if (k <= d) {
    report.k_gt_d = false;
    report.issues.push_back({"k_gt_d", "need K > d", {}});
  }
  if (!is_power_of_two(d) || d < 2) {
    report.d_power_of_two = false;
    report.issues.push_back({"d_power_of_two", "d must be a power of two, d >= 2", {}});
  }
  return report;
}

// Reward table, gap sequence in reward-sorted order, and the H2 hardness
// number: max over sorted positions 2..d of i / gap_i^2.
struct HardnessReport {
  std::vector<double> rewards;    // indexed by arm id - 1
  int best_id = 0;                // ties broken by lowest id
  std::vector<int> sorted_ids;    // descending reward, ties by id
  std::vector<double> sorted_gaps;
  double h2lin = 0.0;
  bool tied_best = false;
};

inline HardnessReport hardness(const Instance& inst) {
  HardnessReport rep;
  const int k = inst.num_arms();
  rep.rewards.resize(k);
  rep.sorted_ids.resize(k);
  for (int i = 0; i < k; ++i) {
    rep.rewards[i] = inst.arms[i].vec.dot(inst.theta_star);
    rep.sorted_ids[i] = inst.arms[i].id;
  }
  std::sort(rep.sorted_ids.begin(), rep.sorted_ids.end(), [&](int a, int b) {
    const double pa = rep.rewards[a - 1], pb = rep.rewards[b - 1];
    if (pa != pb) return pa > pb;
    return a < b;
  });
  rep.best_id = rep.sorted_ids.front();
  const double best = rep.rewards[rep.best_id - 1];
  rep.sorted_gaps.resize(k);
  for (int i = 0; i < k; ++i) rep.sorted_gaps[i] = best - rep.rewards[rep.sorted_ids[i] - 1];
  rep.tied_best = k > 1 && rep.sorted_gaps[1] == 0.0;

  const int d = inst.dim();
  double h = 0.0;
  for (int pos = 2; pos <= std::min(d, k); ++pos) {
    const double gap = rep.sorted_gaps[pos - 1];
    if (gap <= 0.0) {
      h = std::numeric_limits<double>::infinity();
      break;
    }
    h = std::max(h, static_cast<double>(pos) / (gap * gap));
  }
  rep.h2lin = h;
  return rep;
}

enum class GeneratorKind { Sphere, BasisPlus, Explicit };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Sphere;
  int d = 0;
  int k = 0;
  std::uint64_t seed = 0;
  double noise_std = 1.0;
  std::string path;  // Explicit only
};

inline Instance read_instance(const std::string& path);

inline Instance generate(const GeneratorSpec& spec) {
  if (spec.kind == GeneratorKind::Explicit) return read_instance(spec.path);
  if (spec.k <= spec.d) throw InfeasibleGenerator("generate: need K > d");
  if (!is_power_of_two(spec.d)) throw InfeasibleGenerator("generate: d must be a power of two");

  Rng rng(derive_seed(spec.seed, {0xa71e5}));
  constexpr int kMaxAttempts = 64;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Instance inst;
    inst.noise_std = spec.noise_std;
    inst.theta_star = rng.unit_sphere(spec.d);
    inst.arms.reserve(spec.k);
    if (spec.kind == GeneratorKind::BasisPlus) {
      for (int i = 0; i < spec.d; ++i) {
        Arm a;
        a.id = i + 1;
        a.vec = Eigen::VectorXd::Unit(spec.d, i);
        inst.arms.push_back(std::move(a));
      }
    }
    while (inst.num_arms() < spec.k) {
      Arm a;
      a.id = inst.num_arms() + 1;
      a.vec = rng.unit_sphere(spec.d);
      inst.arms.push_back(std::move(a));
    }
    if (validate(inst).ok()) return inst;
  }
  throw InfeasibleGenerator("generate: no valid instance after bounded resampling");
}

// ---------------------------------------------------------------------------
// JSON round trip.  Schema:
// {"d": int, "k": int, "arms": [[...], ...], "theta_star": [...], "noise_std": x}
// ---------------------------------------------------------------------------

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["d"] = inst.dim();
  j["k"] = inst.num_arms();
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : inst.arms) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < a.vec.size(); ++i) row.push_back(a.vec[i]);
    arms.push_back(std::move(row));
  }
  j["arms"] = std::move(arms);
  nlohmann::json theta = nlohmann::json::array();
  for (int i = 0; i < inst.theta_star.size(); ++i) theta.push_back(inst.theta_star[i]);
  j["theta_star"] = std::move(theta);
  j["noise_std"] = inst.noise_std;
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  for (const char* key : {"d", "k", "arms", "theta_star"})
    if (!j.contains(key)) throw SchemaError(std::string("instance json: missing key '") + key + "'");
  const int d = j.at("d").get<int>();
  const int k = j.at("k").get<int>();
  if (d < 1 || k < 1) throw SchemaError("instance json: d and k must be positive");
  const auto& arms = j.at("arms");
  if (!arms.is_array() || static_cast<int>(arms.size()) != k)
    throw SchemaError("instance json: arms must be an array of k rows");
  Instance inst;
  inst.arms.reserve(k);
  for (int i = 0; i < k; ++i) {
    const auto& row = arms.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw SchemaError("instance json: arm row " + std::to_string(i) + " has wrong dimension");
    Arm a;
    a.id = i + 1;
    a.vec.resize(d);
    for (int c = 0; c < d; ++c) a.vec[c] = row.at(c).get<double>();
    inst.arms.push_back(std::move(a));
  }
  const auto& theta = j.at("theta_star");
  if (!theta.is_array() || static_cast<int>(theta.size()) != d)
    throw SchemaError("instance json: theta_star has wrong dimension");
  inst.theta_star.resize(d);
  for (int c = 0; c < d; ++c) inst.theta_star[c] = theta.at(c).get<double>();
  inst.noise_std = j.value("noise_std", 1.0);
  if (inst.noise_std < 0) throw SchemaError("instance json: noise_std must be nonnegative");
  return inst;
}

inline Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("read_instance: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("read_instance: bad json: ") + e.what());
  }
  return instance_from_json(j);
}

inline void write_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("write_instance: cannot open " + path);
  out << instance_to_json(inst).dump(2) << '\n';
}

}  // namespace codedbai
