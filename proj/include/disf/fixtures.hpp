#pragma once

#include <cstddef>
#include <cstdint>

#include "disf/corpus_io.hpp"
#include "disf/matrix.hpp"
#include "disf/rng.hpp"

namespace disf {

// Standard normal draws (Box-Muller over splitmix64), so fixtures are
// identical on every platform.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}
  double operator()();
  SplitMix64& rng() noexcept { return rng_; }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

RowMatrixXd gaussian_rows(std::size_t n, std::size_t d, std::uint64_t seed);

// n rows of i.i.d. standard normal features, ids "iso-<i>".
EmbeddingCorpus isotropic_corpus(std::size_t n, std::size_t d, std::uint64_t seed);

struct ClusterFixture {
  EmbeddingCorpus corpus;
  RowMatrixXd centers;  // one row per cluster
  std::vector<std::size_t> labels;
};

// Equal-sized Gaussian clusters, each with its own random rotation and a
// geometrically decaying axis scale, so every cluster on its own is
// concentrated in a few directions. Rows are interleaved by cluster.
// Cluster c has center center_scale * N(0, I) and covariance R diag(s)^2 R^T
// for a random rotation R and axis scales s_j = axis_scale * axis_decay^j.
struct ClusterShape {
  double center_scale = 0.5;
  double axis_scale = 2.0;
  double axis_decay = 0.9;
};

ClusterFixture anisotropic_clusters(std::size_t n, std::size_t d, std::size_t clusters, std::uint64_t seed,
                                    const ClusterShape& shape = {});

}  // namespace disf
