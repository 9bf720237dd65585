#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "codedbai/design.hpp"
#include "codedbai/errors.hpp"
#include "codedbai/instance.hpp"
#include "codedbai/rng.hpp"
#include "codedbai/stats.hpp"

namespace codedbai {

struct PullTag {
  enum Kind { Uncoded, Coded } kind = Uncoded;
  int id = 0;  // arm id for Uncoded, subset index within the round for Coded

  std::string str() const {
    return (kind == Uncoded ? "uncoded:" : "coded:") + std::to_string(id);
  }
};

struct PullRecord {
  long t = 0;  // 1-based, contiguous
  int round = 0;
  PullTag tag;
  int vec_id = 0;  // index into the transcript's vector table
  double reward = 0.0;
};

// The full time-ordered record of a run. Played vectors are interned once
// per distinct vector so records stay small.
class Transcript {
 public:
  int intern(Eigen::VectorXd v) {
    vectors_.push_back(std::move(v));
    return static_cast<int>(vectors_.size()) - 1;
  }

  void append(int round, PullTag tag, int vec_id, double reward) {
    records_.push_back({static_cast<long>(records_.size()) + 1, round, tag, vec_id, reward});
  }

  const std::vector<PullRecord>& records() const { return records_; }
  const Eigen::VectorXd& vec(int vec_id) const {
    return vectors_.at(static_cast<std::size_t>(vec_id));
  }
  const std::vector<Eigen::VectorXd>& vector_table() const { return vectors_; }
  long size() const { return static_cast<long>(records_.size()); }
  const PullRecord& at_time(long t) const { return records_.at(static_cast<std::size_t>(t - 1)); }

 private:
  std::vector<PullRecord> records_;
  std::vector<Eigen::VectorXd> vectors_;
};

// What the copycat sees: played vectors and round boundaries, never rewards.
struct ChloeRecord {
  long t = 0;
  int round = 0;
  int vec_id = 0;
};

class ChloeView {
 public:
  explicit ChloeView(const Transcript& transcript) : vectors_(&transcript.vector_table()) {
    records_.reserve(transcript.records().size());
    for (const auto& r : transcript.records()) records_.push_back({r.t, r.round, r.vec_id});
  }

  const std::vector<ChloeRecord>& records() const { return records_; }
  const Eigen::VectorXd& vec(int vec_id) const {
    return vectors_->at(static_cast<std::size_t>(vec_id));
  }
  int last_round() const { return records_.empty() ? 0 : records_.back().round; }

 private:
  std::vector<ChloeRecord> records_;
  const std::vector<Eigen::VectorXd>* vectors_;
};

enum class NoiseKind { Gaussian, BoundedUniform };

// Reward oracle with a hard pull budget and its own noise stream.
class Environment {
 public:
  Environment(const Instance& inst, long budget, std::uint64_t seed)
      : theta_(inst.theta_star),
        sigma_(inst.noise_std),
        budget_(budget),
        rng_(seed) {}

  void set_sigma(double sigma) { sigma_ = sigma; }
  void set_noise_kind(NoiseKind kind) { noise_ = kind; }

  double pull(int vec_id, int round, PullTag tag) {
    if (transcript_.size() >= budget_)
      throw BudgetExceeded("pull: budget of " + std::to_string(budget_) + " exhausted");
    const double mean = transcript_.vec(vec_id).dot(theta_);
    const double reward = mean + sigma_ * noise_draw();
    transcript_.append(round, tag, vec_id, reward);
    return reward;
  }

  int intern(Eigen::VectorXd v) { return transcript_.intern(std::move(v)); }

  const Transcript& transcript() const { return transcript_; }
  Transcript take_transcript() { return std::move(transcript_); }
  long pulls_used() const { return transcript_.size(); }
  long budget() const { return budget_; }

 private:
  double noise_draw() {
    if (noise_ == NoiseKind::Gaussian) return rng_.gaussian();
    // variance-1 uniform on [-sqrt(3), sqrt(3)]
    return (2.0 * rng_.uniform() - 1.0) * std::sqrt(3.0);
  }

  Eigen::VectorXd theta_;
  double sigma_;
  long budget_;
  Rng rng_;
  NoiseKind noise_ = NoiseKind::Gaussian;
  Transcript transcript_;
};

struct ConcentrationResult {
  long hits = 0;
  long trials = 0;
  double rate = 0.0;
  Interval interval;
};

// Empirical check of the least-squares tail bound: allocate n pulls by the
// design, estimate theta with lambda = 0, and test
//   <theta_hat - theta*, w> >= sqrt(2 ||w||^2_{V^-1} ln(1/delta))
// for a fresh random unit w each trial.
inline ConcentrationResult concentration_check(const Instance& inst, const Design& design, long n,
                                               double delta, long trials, std::uint64_t seed) {
  const int d = inst.dim();
  const PullAllocation alloc = allocate(design, n);

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [id, count] : alloc.counts)
    v.noalias() += static_cast<double>(count) * inst.arm(id).vec * inst.arm(id).vec.transpose();
  if (!spd_invertible(v)) throw SingularV("concentration_check: allocation does not span");
  Eigen::LDLT<Eigen::MatrixXd> v_ldlt(v);
  const Eigen::MatrixXd v_inv = v_ldlt.solve(Eigen::MatrixXd::Identity(d, d));

  ConcentrationResult result;
  result.trials = trials;
  for (long trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(trial)}));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (const auto& [id, count] : alloc.counts) {
      const auto& a = inst.arm(id).vec;
      const double mean = a.dot(inst.theta_star);
      for (int c = 0; c < count; ++c) rhs.noalias() += (mean + inst.noise_std * rng.gaussian()) * a;
    }
    const Eigen::VectorXd theta_hat = v_ldlt.solve(rhs);
    const Eigen::VectorXd w = rng.unit_sphere(d);
    const double threshold = std::sqrt(2.0 * w.dot(v_inv * w) * std::log(1.0 / delta));
    if ((theta_hat - inst.theta_star).dot(w) >= threshold) ++result.hits;
  }
  result.rate = static_cast<double>(result.hits) / static_cast<double>(trials);
  result.interval = wilson_interval(result.hits, trials);
  return result;
}

}  // namespace codedbai
