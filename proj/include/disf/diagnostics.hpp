#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "disf/feature_stats.hpp"
#include "disf/matrix.hpp"
#include "disf/rng.hpp"

namespace disf {

// Share of the spectrum mass held by the k largest eigenvalues. `spectrum`
// must be sorted descending. Throws UndefinedScoreError on a zero spectrum.
double dominance_from_spectrum(std::span<const double> spectrum, std::size_t k);

// Standardizes `features`, then scores the covariance spectrum.
double dominance_score(const Eigen::Ref<const RowMatrixXd>& features, std::size_t k);

struct NormIdentitySides {
  // sum_i (lambda_i - mean lambda)^2
  double spectral_spread = 0.0;
  // ||C||_F^2 - d
  double frobenius_excess = 0.0;
};

NormIdentitySides norm_identity_sides(const Eigen::Ref<const RowMatrixXd>& z_rows);

// |spectral_spread - frobenius_excess| for the covariance of `z_rows`. Zero
// up to rounding whenever the rows are standardized (trace(C) = d).
double norm_identity_residual(const Eigen::Ref<const RowMatrixXd>& z_rows);

struct CurvePoint {
  std::size_t size = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct MonotonicityCurve {
  std::vector<CurvePoint> points;
  double spearman_rho = 0.0;
};

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant or has fewer than two entries.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Mean proxy value of nested random subsets of growing size.
///
/// `features` are standardized once over all rows. Every trial draws a
/// random ordering; the subset of size s is its first s rows, so subsets
/// within a trial are nested. The std column is the population standard
/// deviation over trials.
// Subsets are scored after standardizing with `reference` when given (for
// example corpus-wide moments, so curves of different selections share one
// scale), otherwise with the moments of `features` itself.
MonotonicityCurve monotonicity_curve(const Eigen::Ref<const RowMatrixXd>& features, std::size_t start,
                                     std::size_t step, std::size_t trials, SplitMix64& rng,
                                     const FeatureMoments* reference = nullptr);

// (1 / |U|) * ||sum_{x in U} x^T x||_F over the listed rows.
double average_utility(const Eigen::Ref<const RowMatrixXd>& rows, std::span<const std::size_t> subset);

// Marginal quantities for one (A, B, e) triple with A a subset of B.
struct TripleGains {
  // exp(-u(A + e)) - exp(-u(A)), likewise for B.
  double gain_a = 0.0;
  double gain_b = 0.0;
  // u(A + e) - u(A), likewise for B.
  double utility_delta_a = 0.0;
  double utility_delta_b = 0.0;
  double max_utility = 0.0;
};

TripleGains triple_gains(const Eigen::Ref<const RowMatrixXd>& rows, std::span<const std::size_t> a,
                         std::span<const std::size_t> b, std::size_t e);

struct SubmodularityStats {
  // min gain_a / gain_b over triples with gain_b > 0; empty if none.
  std::optional<double> gamma_hat;
  double epsilon_hat = 0.0;
  double mu_hat = 0.0;
  double bound = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_discarded = 0;
};

// e^{-2 mu} (e^{2 mu - eps} - 1) / (e^{2 mu} - 1); the mu -> 0 limit is used
// when mu is zero.
double submodularity_bound(double epsilon, double mu);

/// Samples `samples` triples A < B < rows, e outside B, from the
/// standardized rows and reports the empirical weak-submodularity ratio,
/// the gain-difference bound, the average-utility bound and the closed-form
/// lower bound built from them.
SubmodularityStats estimate_submodular_stats(const Eigen::Ref<const RowMatrixXd>& features,
                                             std::size_t samples, SplitMix64& rng);

struct ApproximationReport {
  std::vector<double> ratios;
  double min_ratio = 0.0;
  double median_ratio = 0.0;
  double mean_ratio = 0.0;
  std::vector<std::size_t> optimal_indices;
  double optimal_value = 0.0;
};

// Greedy vs exhaustive optimum over `trials` random first picks on one batch
// of standardized rows.
ApproximationReport approximation_report(const Eigen::Ref<const RowMatrixXd>& z, std::size_t k,
                                         std::size_t trials, SplitMix64& rng);

struct Projection2d {
  RowMatrixXd coords;
  // Set when the covariance has rank < 2; the second column is then zero.
  bool degenerate = false;
};

// Projection of the standardized rows on the two leading covariance
// eigenvectors. Each eigenvector is oriented so that its largest-magnitude
// component is positive.
Projection2d pca_project_2d(const Eigen::Ref<const RowMatrixXd>& features);

struct DiversityOptions {
  std::vector<std::size_t> dominance_ks{1, 5, 10};
  std::size_t curve_start = 2;
  std::size_t curve_step = 0;  // 0 picks roughly 20 points
  std::size_t curve_trials = 10;
  std::size_t submodularity_samples = 0;  // 0 skips the estimate
  std::optional<FeatureMoments> curve_reference;
};

struct DiversityReport {
  std::size_t sample_count = 0;
  std::vector<double> spectrum;
  std::map<std::size_t, double> dominance;
  double norm_identity_residual = 0.0;
  MonotonicityCurve monotonicity;
  std::optional<SubmodularityStats> submodularity;
};

// Requires at least two rows. Dominance keys are the requested ks that do
// not exceed d, plus d itself.
DiversityReport diversity_report(const Eigen::Ref<const RowMatrixXd>& features,
                                 const DiversityOptions& options, SplitMix64& rng);

}  // namespace disf
