#include "disf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "disf/diagnostics.hpp"
#include "disf/feature_stats.hpp"
#include "disf/fixtures.hpp"
#include "disf/selector.hpp"

namespace disf {

namespace {

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

CheckResult check_norm_identity(const VerifyOptions& o) {
  double worst = 0.0;
  std::size_t cases = 0;
  for (const std::size_t n : {std::size_t{16}, std::size_t{256}, o.n}) {
    for (const std::size_t d : {std::size_t{4}, std::size_t{32}, o.dim}) {
      for (std::uint64_t s = 0; s < 3; ++s) {
        const auto batch = standardize_batch(gaussian_rows(n, d, o.seed + 1000 * n + 10 * d + s));
        if (!batch.zero_variance_dims.empty()) continue;
        const double scale = covariance(batch.z).C.squaredNorm();
        worst = std::max(worst, norm_identity_residual(batch.z) / scale);
        ++cases;
      }
    }
  }
  return {"norm-identity", worst <= 1e-6,
          std::to_string(cases) + " batches, max relative residual " + sci(worst) + " (limit 1e-6)"};
}

CheckResult check_gram(const VerifyOptions& o) {
  const std::size_t d = std::min<std::size_t>(o.dim, 64);
  NormalSampler normal(o.seed ^ 0x6A09E667F3BCC908ULL);
  GramAccumulator acc(d);
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  double worst_cache = 0.0;
  constexpr std::size_t kInserts = 2000;
  for (std::size_t i = 0; i < kInserts; ++i) {
    for (auto& v : z) v = normal();
    acc.insert(z);
    if (o.inject_gram_fault && i == kInserts / 2) acc.overwrite_cached_frob_sq_for_testing(acc.frob_sq() * 1.01);
    const double dense = acc.recompute_frob_sq();
    worst_cache = std::max(worst_cache, std::abs(acc.frob_sq() - dense) / dense);
  }

  double worst_gain = 0.0;
  for (std::size_t t = 0; t < 200; ++t) {
    const std::size_t m = 2 + normal.rng().bounded(20);
    const std::size_t dim = 2 + normal.rng().bounded(15);
    const RowMatrixXd rows = gaussian_rows(m + 1, dim, o.seed + 7 * t + 3);
    GramAccumulator small(dim);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) small.insert(rows.row(i).transpose());
    if (o.inject_gram_fault) small.overwrite_cached_frob_sq_for_testing(small.frob_sq() * 1.01);
    const double gain = small.gain(rows.row(static_cast<Eigen::Index>(m)).transpose());
    const double explicit_value = proxy_value(rows);
    worst_gain = std::max(worst_gain, std::abs(gain - explicit_value) / explicit_value);
  }
  const bool ok = worst_cache <= 1e-9 && worst_gain <= 1e-9;
  return {"gram-incremental", ok,
          "cache vs dense " + sci(worst_cache) + ", gain vs explicit proxy " + sci(worst_gain) + " (limit 1e-9)"};
}

// Exhaustive single-step argmax over explicit unions; nullopt when the top
// two scores are within 1e-12 relative.
std::optional<std::vector<std::size_t>> stepwise_oracle(const RowMatrixXd& z, std::size_t k, std::size_t first) {
  const auto m = static_cast<std::size_t>(z.rows());
  std::vector<std::size_t> chosen{first};
  while (chosen.size() < k) {
    double best = -1.0, second = -1.0;
    std::size_t arg = m;
    for (std::size_t c = 0; c < m; ++c) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      RowMatrixXd rows(static_cast<Eigen::Index>(chosen.size() + 1), z.cols());
      for (std::size_t i = 0; i < chosen.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(chosen[i]));
      rows.row(static_cast<Eigen::Index>(chosen.size())) = z.row(static_cast<Eigen::Index>(c));
      const double v = proxy_value(rows);
      if (v > best) {
        second = best;
        best = v;
        arg = c;
      } else if (v > second) {
        second = v;
      }
    }
    if (second >= 0.0 && best - second <= 1e-12 * best) return std::nullopt;
    chosen.push_back(arg);
  }
  return chosen;
}

CheckResult check_greedy_oracle(const VerifyOptions& o) {
  SplitMix64 rng(o.seed ^ 0xBB67AE8584CAA73BULL);
  std::size_t compared = 0, mismatches = 0, skipped = 0;
  for (std::size_t t = 0; t < 60; ++t) {
    const std::size_t m = 4 + rng.bounded(9);
    const std::size_t k = 2 + rng.bounded(3);
    const std::size_t d = 2 + rng.bounded(5);
    const RowMatrixXd z = standardize_batch(gaussian_rows(m, d, rng.next())).z;
    const std::size_t first = rng.bounded(m);
    const auto expected = stepwise_oracle(z, k, first);
    if (!expected) {
      ++skipped;
      continue;
    }
    ++compared;
    if (greedy_select_batch_from(z, k, first).indices != *expected) ++mismatches;
  }
  return {"greedy-vs-oracle", mismatches == 0 && compared > 0,
          std::to_string(compared) + " batches compared, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(skipped) + " skipped for near-ties"};
}

CheckResult check_determinism(const VerifyOptions& o) {
  const auto corpus = isotropic_corpus(o.n, o.dim, o.seed);
  SelectionConfig config;
  config.seed = o.seed;
  config.batch_scale = 1024;
  config.budget_fraction = 0.015;
  config.workers = 1;
  const auto serial = select_corpus(corpus, config);
  config.workers = std::max<std::size_t>(o.workers, 4);
  const auto parallel = select_corpus(corpus, config);
  const bool same = serial.selected_ids == parallel.selected_ids;
  const bool accounted = serial.selected_ids.size() == serial.quota_total();
  return {"determinism", same && accounted,
          std::to_string(serial.selected_ids.size()) + " ids selected from " + std::to_string(o.n) + "x" +
              std::to_string(o.dim) + ", workers 1 vs " + std::to_string(config.workers) +
              (same ? " identical" : " differ") + (accounted ? "" : ", quota sum mismatch")};
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  return {check_norm_identity(options), check_gram(options), check_greedy_oracle(options), check_determinism(options)};
}

}  // namespace disf
