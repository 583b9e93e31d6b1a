#include "disf/report_json.hpp"

#include <string>

namespace disf {

nlohmann::json to_json(const SelectionResult& result) {
  nlohmann::json batches = nlohmann::json::array();
  for (const auto& b : result.per_batch) {
    batches.push_back({{"index", b.batch_index},
                       {"size", b.batch_size},
                       {"quota", b.quota},
                       {"ids", b.ids},
                       {"trace", b.trace},
                       {"seconds", b.seconds}});
  }
  return {{"method", std::string(to_string(result.method))},
          {"selected_count", result.selected_ids.size()},
          {"quota_total", result.quota_total()},
          {"per_batch", std::move(batches)}};
}

nlohmann::json to_json(const SubmodularityStats& stats) {
  return {{"gamma_hat", stats.gamma_hat ? nlohmann::json(*stats.gamma_hat) : nlohmann::json(nullptr)},
          {"epsilon_hat", stats.epsilon_hat},
          {"mu_hat", stats.mu_hat},
          {"bound", stats.bound},
          {"samples_used", stats.samples_used},
          {"samples_discarded", stats.samples_discarded}};
}

nlohmann::json to_json(const MonotonicityCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points) points.push_back({{"size", p.size}, {"mean", p.mean}, {"std", p.std}});
  return {{"points", std::move(points)}, {"spearman_rho", curve.spearman_rho}};
}

nlohmann::json to_json(const DiversityReport& report) {
  nlohmann::json dominance = nlohmann::json::object();
  for (const auto& [k, v] : report.dominance) dominance[std::to_string(k)] = v;
  nlohmann::json out = {{"sample_count", report.sample_count},
                        {"spectrum", report.spectrum},
                        {"dominance", std::move(dominance)},
                        {"norm_identity_residual", report.norm_identity_residual},
                        {"monotonicity", to_json(report.monotonicity)}};
  out["submodularity"] = report.submodularity ? to_json(*report.submodularity) : nlohmann::json(nullptr);
  return out;
}

}  // namespace disf
