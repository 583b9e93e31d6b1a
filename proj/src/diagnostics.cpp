#include "disf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "disf/error.hpp"
#include "disf/feature_stats.hpp"
#include "disf/selector.hpp"

namespace disf {

double dominance_from_spectrum(std::span<const double> spectrum, std::size_t k) {
  if (k < 1 || k > spectrum.size()) {
    throw ArgumentError("dominance needs 1 <= k <= d, got k=" + std::to_string(k) + ", d=" +
                        std::to_string(spectrum.size()));
  }
  // Top-k mass and total share one running sum, so k = d gives exactly 1.
  double running = 0.0;
  double top = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    running += spectrum[i];
    if (i + 1 == k) top = running;
  }
  if (!(running > 0.0)) throw UndefinedScoreError("dominance is undefined for an all-zero spectrum");
  return top / running;
}

double dominance_score(const Eigen::Ref<const RowMatrixXd>& features, std::size_t k) {
  const auto batch = standardize_batch(features);
  const auto spectrum = eigen_spectrum(covariance(batch.z));
  return dominance_from_spectrum(spectrum, k);
}

NormIdentitySides norm_identity_sides(const Eigen::Ref<const RowMatrixXd>& z_rows) {
  const auto cov = covariance(z_rows);
  const auto spectrum = eigen_spectrum(cov);
  const double mean = std::accumulate(spectrum.begin(), spectrum.end(), 0.0) /
                      static_cast<double>(spectrum.size());
  NormIdentitySides sides;
  for (const double lambda : spectrum) sides.spectral_spread += (lambda - mean) * (lambda - mean);
  sides.frobenius_excess = cov.C.squaredNorm() - static_cast<double>(cov.C.rows());
  return sides;
}

double norm_identity_residual(const Eigen::Ref<const RowMatrixXd>& z_rows) {
  const auto sides = norm_identity_sides(z_rows);
  return std::abs(sides.spectral_spread - sides.frobenius_excess);
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  const auto n = values.size();
  auto order = iota_indices(n);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman_rho needs equal-length inputs");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MonotonicityCurve monotonicity_curve(const Eigen::Ref<const RowMatrixXd>& features, std::size_t start,
                                     std::size_t step, std::size_t trials, SplitMix64& rng,
                                     const FeatureMoments* reference) {
  if (start < 2) throw ArgumentError("curve start must be at least 2");
  if (step < 1) throw ArgumentError("curve step must be at least 1");
  if (trials < 1) throw ArgumentError("curve needs at least one trial");
  const auto m = static_cast<std::size_t>(features.rows());
  if (m < start) {
    throw ArgumentError("curve start " + std::to_string(start) + " exceeds the " + std::to_string(m) +
                        " available rows");
  }
  const RowMatrixXd z = reference != nullptr ? standardize_with(features, *reference).z : standardize_batch(features).z;
  const std::size_t points = (m - start) / step + 1;

  std::vector<std::vector<double>> values(points, std::vector<double>(trials));
  for (std::size_t t = 0; t < trials; ++t) {
    auto order = iota_indices(m);
    shuffle(order, rng);
    GramAccumulator acc(static_cast<std::size_t>(z.cols()));
    std::size_t next_point = 0;
    for (std::size_t i = 0; i < m && next_point < points; ++i) {
      acc.insert(z.row(static_cast<Eigen::Index>(order[i])).transpose());
      if (i + 1 == start + next_point * step) {
        values[next_point][t] = proxy_from_gram(acc.frob_sq(), acc.count());
        ++next_point;
      }
    }
  }

  MonotonicityCurve curve;
  std::vector<double> sizes, means;
  for (std::size_t p = 0; p < points; ++p) {
    const auto& v = values[p];
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(trials);
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    CurvePoint point{start + p * step, mean, std::sqrt(var / static_cast<double>(trials))};
    curve.points.push_back(point);
    sizes.push_back(static_cast<double>(point.size));
    means.push_back(mean);
  }
  curve.spearman_rho = spearman_rho(sizes, means);
  return curve;
}

double average_utility(const Eigen::Ref<const RowMatrixXd>& rows, std::span<const std::size_t> subset) {
  if (subset.empty()) throw ArgumentError("average utility of an empty set is undefined");
  GramAccumulator acc(static_cast<std::size_t>(rows.cols()));
  for (const auto i : subset) acc.insert(rows.row(static_cast<Eigen::Index>(i)).transpose());
  return std::sqrt(acc.recompute_frob_sq()) / static_cast<double>(subset.size());
}

namespace {

// u(U) and u(U + e) from an accumulator holding U.
std::pair<double, double> utilities_with(const GramAccumulator& acc, const Eigen::VectorXd& e) {
  const double n = static_cast<double>(acc.count());
  const double sq = e.squaredNorm();
  const double without = std::sqrt(std::max(acc.frob_sq(), 0.0)) / n;
  const double with = std::sqrt(std::max(acc.frob_sq() + 2.0 * acc.quadratic_form(e) + sq * sq, 0.0)) / (n + 1.0);
  return {without, with};
}

TripleGains gains_from_utilities(std::pair<double, double> a, std::pair<double, double> b) {
  TripleGains g;
  g.gain_a = std::exp(-a.second) - std::exp(-a.first);
  g.gain_b = std::exp(-b.second) - std::exp(-b.first);
  g.utility_delta_a = a.second - a.first;
  g.utility_delta_b = b.second - b.first;
  g.max_utility = std::max({a.first, a.second, b.first, b.second});
  return g;
}

}  // namespace

TripleGains triple_gains(const Eigen::Ref<const RowMatrixXd>& rows, std::span<const std::size_t> a,
                         std::span<const std::size_t> b, std::size_t e) {
  if (a.empty() || b.empty()) throw ArgumentError("gains need nonempty A and B");
  const auto d = static_cast<std::size_t>(rows.cols());
  GramAccumulator acc_a(d), acc_b(d);
  for (const auto i : a) acc_a.insert(rows.row(static_cast<Eigen::Index>(i)).transpose());
  for (const auto i : b) acc_b.insert(rows.row(static_cast<Eigen::Index>(i)).transpose());
  const Eigen::VectorXd ev = rows.row(static_cast<Eigen::Index>(e)).transpose();
  return gains_from_utilities(utilities_with(acc_a, ev), utilities_with(acc_b, ev));
}

double submodularity_bound(double epsilon, double mu) {
  if (mu == 0.0 && epsilon == 0.0) return 1.0;
  return std::exp(-2.0 * mu) * std::expm1(2.0 * mu - epsilon) / std::expm1(2.0 * mu);
}

SubmodularityStats estimate_submodular_stats(const Eigen::Ref<const RowMatrixXd>& features,
                                             std::size_t samples, SplitMix64& rng) {
  const auto m = static_cast<std::size_t>(features.rows());
  if (m < 4) throw ArgumentError("submodularity estimate needs at least 4 rows, got " + std::to_string(m));
  if (samples < 1) throw ArgumentError("submodularity estimate needs at least one sample");
  const RowMatrixXd z = standardize_batch(features).z;
  const auto d = static_cast<std::size_t>(z.cols());

  SubmodularityStats stats;
  auto order = iota_indices(m);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto b_size = 2 + static_cast<std::size_t>(rng.bounded(m - 2));      // [2, m - 1]
    const auto a_size = 1 + static_cast<std::size_t>(rng.bounded(b_size - 1));  // [1, b_size - 1]
    for (std::size_t i = 0; i <= b_size; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.bounded(m - i));
      std::swap(order[i], order[j]);
    }
    const Eigen::VectorXd e = z.row(static_cast<Eigen::Index>(order[b_size])).transpose();

    GramAccumulator acc(d);
    for (std::size_t i = 0; i < a_size; ++i) acc.insert(z.row(static_cast<Eigen::Index>(order[i])).transpose());
    const auto ua = utilities_with(acc, e);
    for (std::size_t i = a_size; i < b_size; ++i) acc.insert(z.row(static_cast<Eigen::Index>(order[i])).transpose());
    const auto ub = utilities_with(acc, e);
    const auto g = gains_from_utilities(ua, ub);

    stats.epsilon_hat = std::max(stats.epsilon_hat, std::abs(g.utility_delta_a - g.utility_delta_b));
    stats.mu_hat = std::max(stats.mu_hat, g.max_utility);
    if (g.gain_b > 0.0) {
      const double ratio = g.gain_a / g.gain_b;
      stats.gamma_hat = stats.gamma_hat ? std::min(*stats.gamma_hat, ratio) : ratio;
      ++stats.samples_used;
    } else {
      ++stats.samples_discarded;
    }
  }
  stats.bound = submodularity_bound(stats.epsilon_hat, stats.mu_hat);
  return stats;
}

ApproximationReport approximation_report(const Eigen::Ref<const RowMatrixXd>& z, std::size_t k,
                                         std::size_t trials, SplitMix64& rng) {
  if (trials < 1) throw ArgumentError("approximation report needs at least one trial");
  const auto best = brute_force_best_subset(z, k);
  ApproximationReport report;
  report.optimal_indices = best.indices;
  report.optimal_value = best.value;

  RowMatrixXd rows(static_cast<Eigen::Index>(k), z.cols());
  for (std::size_t t = 0; t < trials; ++t) {
    auto greedy = greedy_select_batch(z, k, rng).indices;
    // Evaluate in ascending index order, as the exhaustive search does.
    std::sort(greedy.begin(), greedy.end());
    for (std::size_t i = 0; i < k; ++i) rows.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(greedy[i]));
    report.ratios.push_back(proxy_value(rows) / best.value);
  }

  auto sorted = report.ratios;
  std::sort(sorted.begin(), sorted.end());
  report.min_ratio = sorted.front();
  const auto n = sorted.size();
  report.median_ratio = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  report.mean_ratio = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  return report;
}

Projection2d pca_project_2d(const Eigen::Ref<const RowMatrixXd>& features) {
  if (features.rows() < 3) throw ArgumentError("PCA projection needs at least 3 rows");
  if (features.cols() < 2) throw ArgumentError("PCA projection needs at least 2 dimensions");
  const RowMatrixXd z = standardize_batch(features).z;
  const auto cov = covariance(z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov.C);
  if (solver.info() != Eigen::Success) throw ValidationError("eigen decomposition failed");

  const auto d = cov.C.rows();
  Eigen::MatrixXd basis(d, 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    basis.col(c) = v;
  }

  Projection2d out;
  out.coords = z * basis;
  if (solver.eigenvalues()(d - 2) <= kEigenClampThreshold) {
    out.degenerate = true;
    out.coords.col(1).setZero();
  }
  return out;
}

DiversityReport diversity_report(const Eigen::Ref<const RowMatrixXd>& features,
                                 const DiversityOptions& options, SplitMix64& rng) {
  const auto m = static_cast<std::size_t>(features.rows());
  if (m < 2) throw ArgumentError("diversity report needs at least 2 rows, got " + std::to_string(m));
  const auto d = static_cast<std::size_t>(features.cols());
  const auto batch = standardize_batch(features);

  DiversityReport report;
  report.sample_count = m;
  report.spectrum = eigen_spectrum(covariance(batch.z));
  auto ks = options.dominance_ks;
  ks.push_back(d);
  for (const auto k : ks) {
    if (k >= 1 && k <= d) report.dominance[k] = dominance_from_spectrum(report.spectrum, k);
  }
  report.norm_identity_residual = norm_identity_residual(batch.z);

  const auto start = std::clamp<std::size_t>(options.curve_start, 2, m);
  const auto step = options.curve_step > 0 ? options.curve_step : std::max<std::size_t>(1, (m - start) / 19);
  report.monotonicity = monotonicity_curve(features, start, step, std::max<std::size_t>(1, options.curve_trials), rng,
                                           options.curve_reference ? &*options.curve_reference : nullptr);

  if (options.submodularity_samples > 0 && m >= 4) {
    report.submodularity = estimate_submodular_stats(features, options.submodularity_samples, rng);
  }
  return report;
}

}  // namespace disf
