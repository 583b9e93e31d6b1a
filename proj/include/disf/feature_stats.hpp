#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "disf/matrix.hpp"

namespace disf {

inline constexpr double kZeroVarianceThreshold = 1e-12;
inline constexpr double kEigenClampThreshold = 1e-10;

/// z-scored rows plus the statistics used to produce them.
struct StandardizedBatch {
  RowMatrixXd z;
  Eigen::VectorXd mean;
  // Sample standard deviation (n - 1 denominator).
  Eigen::VectorXd std;
  std::vector<std::size_t> zero_variance_dims;
};

struct FeatureMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

// Column mean and sample standard deviation. Requires at least two rows.
FeatureMoments feature_moments(const Eigen::Ref<const RowMatrixXd>& features);

// Standardizes `rows` in place and returns the zero-variance dimensions.
std::vector<std::size_t> standardize_in_place(Eigen::Ref<RowMatrixXd> rows, const FeatureMoments& moments);

/// Standardizes with statistics computed over exactly these rows. Columns
/// whose standard deviation is at most 1e-12 are zeroed and reported.
StandardizedBatch standardize_batch(const Eigen::Ref<const RowMatrixXd>& features);

// Applies externally computed statistics, e.g. corpus-wide moments.
StandardizedBatch standardize_with(const Eigen::Ref<const RowMatrixXd>& features,
                                   const FeatureMoments& moments);

struct CovarianceMatrix {
  Eigen::MatrixXd C;
  std::size_t sample_count = 0;
};

// C = (1 / (m - 1)) * sum_i z_i^T z_i over the given rows.
CovarianceMatrix covariance(const Eigen::Ref<const RowMatrixXd>& z_rows);

double frobenius_norm(const Eigen::Ref<const Eigen::MatrixXd>& m);

// exp(-||C||_F) for the covariance of the given standardized rows.
double proxy_value(const Eigen::Ref<const RowMatrixXd>& z_rows);

// Proxy value from the squared Frobenius norm of the unscaled Gram sum and
// the set size: exp(-sqrt(frob_sq) / (count - 1)).
double proxy_from_gram(double frob_sq, std::size_t count);

/// Running Gram sum S = sum z^T z with a cached ||S||_F^2.
///
/// Inserting z updates the cache with the rank-one identity
/// ||S + z z^T||_F^2 = ||S||_F^2 + 2 z^T S z + ||z||^4, so both insertion and
/// candidate scoring cost O(d^2) regardless of how many rows were added.
class GramAccumulator {
 public:
  explicit GramAccumulator(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(S_.rows()); }
  std::size_t count() const noexcept { return count_; }
  double frob_sq() const noexcept { return frob_sq_; }
  const Eigen::MatrixXd& gram() const noexcept { return S_; }

  void insert(const Eigen::Ref<const Eigen::VectorXd>& z);

  // Proxy value of the accumulated set plus z, without mutating. Needs at
  // least one row already inserted so the union has two.
  double gain(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  // z^T S z against the current (pre-insertion) sum.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  // Dense ||S||_F^2, for checking the cache.
  double recompute_frob_sq() const;

  // Fault injection for the verification suite.
  void overwrite_cached_frob_sq_for_testing(double value) noexcept { frob_sq_ = value; }

 private:
  void check_dim(Eigen::Index size) const;

  Eigen::MatrixXd S_;
  std::size_t count_ = 0;
  double frob_sq_ = 0.0;
};

/// Eigenvalues of a symmetric matrix in descending order. Values within
/// 1e-10 of zero are clamped to zero. Throws ValidationError if the matrix is
/// asymmetric beyond 1e-6.
std::vector<double> eigen_spectrum(const CovarianceMatrix& cov);
std::vector<double> eigen_spectrum(const Eigen::Ref<const Eigen::MatrixXd>& symmetric);

}  // namespace disf
