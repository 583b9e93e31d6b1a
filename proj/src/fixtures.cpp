#include "disf/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/QR>

namespace disf {

double NormalSampler::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = rng_.uniform();
  } while (u1 <= 0.0);
  const double u2 = rng_.uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

RowMatrixXd gaussian_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  NormalSampler normal(seed);
  RowMatrixXd rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = normal();
  }
  return rows;
}

EmbeddingCorpus isotropic_corpus(std::size_t n, std::size_t d, std::uint64_t seed) {
  EmbeddingCorpus corpus;
  corpus.features = gaussian_rows(n, d, seed).cast<float>();
  corpus.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) corpus.ids.push_back("iso-" + std::to_string(i));
  return corpus;
}

ClusterFixture anisotropic_clusters(std::size_t n, std::size_t d, std::size_t clusters, std::uint64_t seed,
                                    const ClusterShape& shape) {
  NormalSampler normal(seed);
  const auto dd = static_cast<Eigen::Index>(d);

  ClusterFixture fixture;
  fixture.centers.resize(static_cast<Eigen::Index>(clusters), dd);
  std::vector<Eigen::MatrixXd> transforms;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (Eigen::Index j = 0; j < dd; ++j) fixture.centers(static_cast<Eigen::Index>(c), j) = shape.center_scale * normal();
    Eigen::MatrixXd g(dd, dd);
    for (Eigen::Index i = 0; i < dd; ++i) {
      for (Eigen::Index j = 0; j < dd; ++j) g(i, j) = normal();
    }
    const Eigen::MatrixXd rotation = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Eigen::VectorXd scale(dd);
    for (Eigen::Index j = 0; j < dd; ++j) scale(j) = shape.axis_scale * std::pow(shape.axis_decay, static_cast<double>(j));
    transforms.push_back(rotation * scale.asDiagonal());
  }

  fixture.corpus.features.resize(static_cast<Eigen::Index>(n), dd);
  fixture.corpus.ids.reserve(n);
  Eigen::VectorXd g(dd);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = i % clusters;
    for (Eigen::Index j = 0; j < dd; ++j) g(j) = normal();
    const Eigen::VectorXd x = fixture.centers.row(static_cast<Eigen::Index>(c)).transpose() + transforms[c] * g;
    fixture.corpus.features.row(static_cast<Eigen::Index>(i)) = x.transpose().cast<float>();
    fixture.corpus.ids.push_back("c" + std::to_string(c) + "-" + std::to_string(i));
    fixture.labels.push_back(c);
  }
  return fixture;
}

}  // namespace disf
