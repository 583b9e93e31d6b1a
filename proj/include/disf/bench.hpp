#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "disf/corpus_io.hpp"
#include "disf/selector.hpp"

namespace disf {

struct BenchOptions {
  std::vector<std::size_t> grid{128, 256, 512, 1024, 2048};
  std::size_t quota = 16;
  std::size_t dim = 768;
  // Batches timed per grid point; the corpus must hold batches * b rows.
  std::size_t batches = 2;
  // Each point is timed this many times and the fastest run is kept.
  std::size_t repeats = 3;
  std::uint64_t seed = 42;
  Method method = Method::disf;
};

struct BenchRow {
  std::size_t batch_scale = 0;
  std::size_t quota = 0;
  std::size_t dim = 0;
  double seconds_per_batch = 0.0;
  double seconds_total = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  // Least-squares slope of log(seconds/batch) against log(b).
  double exponent = 0.0;
  std::vector<std::string> warnings;
};

// Times select_corpus (single worker) at a fixed quota across batch scales.
// Without a corpus, an isotropic Gaussian one of the needed size is built.
// Grid points larger than the corpus allows are dropped with a warning.
BenchResult run_bench(const BenchOptions& options, const EmbeddingCorpus* corpus = nullptr);

// Slope of the least-squares line through (log x, log y).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace disf
