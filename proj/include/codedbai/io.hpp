#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "codedbai/baselines.hpp"
#include "codedbai/environment.hpp"
#include "codedbai/harness.hpp"
#include "codedbai/secure.hpp"

namespace codedbai {

inline std::string vector_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr.dump();
}

// CSV schema: time,round,tag,vector(json),reward. The Chloe variant drops the
// reward column; that projection is what attackers are allowed to read.
inline void export_transcript_csv(const Transcript& transcript, std::ostream& out,
                                  bool chloe_view) {
  out << (chloe_view ? "time,round,tag,vector" : "time,round,tag,vector,reward") << '\n';
  out.precision(17);
  for (const auto& rec : transcript.records()) {
    out << rec.t << ',' << rec.round << ',' << rec.tag.str() << ",\""
        << vector_json(transcript.vec(rec.vec_id)) << '"';
    if (!chloe_view) out << ',' << rec.reward;
    out << '\n';
  }
}

inline void export_transcript_csv(const Transcript& transcript, const std::string& path,
                                  bool chloe_view) {
  std::ofstream out(path);
  if (!out) throw Error("export_transcript_csv: cannot open " + path);
  export_transcript_csv(transcript, out, chloe_view);
}

inline nlohmann::json design_json(const Design& design) {
  nlohmann::json j;
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [id, w] : design.weights) weights[std::to_string(id)] = w;
  j["weights"] = std::move(weights);
  j["g_value"] = design.g_value;
  j["support"] = design.support_size();
  j["reduced_dim"] = design.reduced_dim;
  j["converged"] = design.converged;
  return j;
}

// Shared result schema for every algorithm.
inline nlohmann::json algorithm_result_json(const std::string& algo, int declared_best,
                                            long pulls_used, long budget,
                                            const std::vector<std::vector<int>>& survivors) {
  nlohmann::json j;
  j["algo"] = algo;
  j["declared_best"] = declared_best;
  j["pulls_used"] = pulls_used;
  j["budget"] = budget;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& s : survivors) rounds.push_back(s);
  j["survivors_per_round"] = std::move(rounds);
  return j;
}

inline nlohmann::json diagnostics_json(const SecureResult& result) {
  nlohmann::json j = algorithm_result_json("secure", result.declared_best, result.pulls_used,
                                           result.budget, result.survivors);
  j["m"] = result.m;
  j["dummies"] = result.dummies;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& info : result.rounds) {
    nlohmann::json r;
    r["round"] = info.round;
    r["pulls"] = info.pulls;
    nlohmann::json alloc = nlohmann::json::object();
    for (const auto& [id, c] : info.allocation) alloc[std::to_string(id)] = c;
    r["allocation"] = std::move(alloc);
    if (info.round >= 2) {
      r["lambda_row_sum_max"] = info.lambda_max_row_sum;
      r["lambda_row_sum_min"] = info.lambda_min_row_sum;
    }
    r["survivors_after"] = info.survivors_after;
    rounds.push_back(std::move(r));
  }
  j["rounds"] = std::move(rounds);
  nlohmann::json partitions = nlohmann::json::array();
  for (const auto& part : result.partitions) {
    nlohmann::json p;
    p["round"] = part.round;
    p["subsets"] = part.subsets;
    partitions.push_back(std::move(p));
  }
  j["partitions"] = std::move(partitions);
  return j;
}

}  // namespace codedbai
