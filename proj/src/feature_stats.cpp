#include "disf/feature_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Eigenvalues>

#include "disf/error.hpp"

namespace disf {

FeatureMoments feature_moments(const Eigen::Ref<const RowMatrixXd>& features) {
  const auto n = features.rows();
  if (n < 2) {
    throw ArgumentError("standardization needs at least 2 rows, got " + std::to_string(n));
  }
  // Row sweeps keep the access contiguous for row-major storage.
  const auto d = features.cols();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) sum += features.row(i);
  const Eigen::RowVectorXd mean = sum / static_cast<double>(n);
  Eigen::ArrayXXd sq = Eigen::ArrayXXd::Zero(1, d);
  for (Eigen::Index i = 0; i < n; ++i) sq += (features.row(i) - mean).array().square();

  FeatureMoments moments;
  moments.mean = mean.transpose();
  moments.std = (sq / static_cast<double>(n - 1)).sqrt().matrix().transpose();
  return moments;
}

std::vector<std::size_t> standardize_in_place(Eigen::Ref<RowMatrixXd> rows, const FeatureMoments& moments) {
  const auto d = rows.cols();
  if (moments.mean.size() != d || moments.std.size() != d) {
    throw ArgumentError("moments have dimension " + std::to_string(moments.mean.size()) +
                        ", features " + std::to_string(d));
  }
  std::vector<std::size_t> zero_variance;
  Eigen::ArrayXd divisor(d);
  Eigen::ArrayXd keep(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool live = moments.std(j) > kZeroVarianceThreshold;
    if (!live) zero_variance.push_back(static_cast<std::size_t>(j));
    divisor(j) = live ? moments.std(j) : 1.0;
    keep(j) = live ? 1.0 : 0.0;
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    rows.row(i) = ((rows.row(i).transpose() - moments.mean).array() / divisor * keep).matrix().transpose();
  }
  return zero_variance;
}

StandardizedBatch standardize_with(const Eigen::Ref<const RowMatrixXd>& features,
                                   const FeatureMoments& moments) {
  StandardizedBatch batch;
  batch.z = features;
  batch.zero_variance_dims = standardize_in_place(batch.z, moments);
  batch.mean = moments.mean;
  batch.std = moments.std;
  return batch;
}

StandardizedBatch standardize_batch(const Eigen::Ref<const RowMatrixXd>& features) {
  return standardize_with(features, feature_moments(features));
}

CovarianceMatrix covariance(const Eigen::Ref<const RowMatrixXd>& z_rows) {
  const auto m = z_rows.rows();
  if (m < 2) throw ArgumentError("covariance needs at least 2 rows, got " + std::to_string(m));
  CovarianceMatrix cov;
  cov.sample_count = static_cast<std::size_t>(m);
  cov.C = Eigen::MatrixXd::Zero(z_rows.cols(), z_rows.cols());
  cov.C.selfadjointView<Eigen::Lower>().rankUpdate(z_rows.transpose(), 1.0 / static_cast<double>(m - 1));
  cov.C.triangularView<Eigen::StrictlyUpper>() = cov.C.transpose();
  return cov;
}

double frobenius_norm(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (!m.allFinite()) throw ValidationError("matrix has non-finite entries");
  return m.norm();
}

double proxy_from_gram(double frob_sq, std::size_t count) {
  if (count < 2) throw ArgumentError("the proxy value needs at least 2 rows");
  return std::exp(-std::sqrt(std::max(frob_sq, 0.0)) / static_cast<double>(count - 1));
}

double proxy_value(const Eigen::Ref<const RowMatrixXd>& z_rows) {
  return std::exp(-frobenius_norm(covariance(z_rows).C));
}

GramAccumulator::GramAccumulator(std::size_t dim)
    : S_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

void GramAccumulator::check_dim(Eigen::Index size) const {
  if (size != S_.rows()) {
    throw ArgumentError("vector has dimension " + std::to_string(size) + ", accumulator " +
                        std::to_string(S_.rows()));
  }
}

double GramAccumulator::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  check_dim(z.size());
  return z.dot(S_ * z);
}

void GramAccumulator::insert(const Eigen::Ref<const Eigen::VectorXd>& z) {
  check_dim(z.size());
  if (!z.allFinite()) throw ValidationError("inserted vector has non-finite entries");
  const double quad = z.dot(S_ * z);
  const double sq = z.squaredNorm();
  frob_sq_ += 2.0 * quad + sq * sq;
  S_.noalias() += z * z.transpose();
  ++count_;
}

double GramAccumulator::gain(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  check_dim(z.size());
  if (count_ == 0) throw ArgumentError("gain needs a nonempty accumulator");
  const double sq = z.squaredNorm();
  return proxy_from_gram(frob_sq_ + 2.0 * z.dot(S_ * z) + sq * sq, count_ + 1);
}

double GramAccumulator::recompute_frob_sq() const { return S_.squaredNorm(); }

std::vector<double> eigen_spectrum(const Eigen::Ref<const Eigen::MatrixXd>& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw ValidationError("matrix is not square");
  if (!symmetric.allFinite()) throw ValidationError("matrix has non-finite entries");
  const double asym = (symmetric - symmetric.transpose()).cwiseAbs().maxCoeff();
  if (symmetric.size() > 0 && asym > 1e-6) {
    throw ValidationError("matrix is asymmetric by " + std::to_string(asym));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ValidationError("eigen decomposition failed");
  std::vector<double> values(solver.eigenvalues().data(),
                             solver.eigenvalues().data() + solver.eigenvalues().size());
  for (auto& v : values) {
    if (std::abs(v) < kEigenClampThreshold) v = 0.0;
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

std::vector<double> eigen_spectrum(const CovarianceMatrix& cov) { return eigen_spectrum(cov.C); }

}  // namespace disf
