#include "disf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "disf/error.hpp"
#include "disf/fixtures.hpp"

namespace disf {

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ArgumentError("slope needs at least two distinct x values");
  return sxy / sxx;
}

BenchResult run_bench(const BenchOptions& options, const EmbeddingCorpus* corpus) {
  if (options.grid.empty()) throw ArgumentError("bench grid is empty");
  if (options.quota < 1) throw ArgumentError("bench quota must be at least 1");
  if (options.batches < 1 || options.repeats < 1) throw ArgumentError("bench needs batches and repeats >= 1");

  EmbeddingCorpus synthetic;
  if (corpus == nullptr) {
    const auto largest = *std::max_element(options.grid.begin(), options.grid.end());
    synthetic = isotropic_corpus(largest * options.batches, options.dim, options.seed);
    corpus = &synthetic;
  }

  BenchResult result;
  std::vector<double> xs, ys;
  for (const auto b : options.grid) {
    const auto rows = b * options.batches;
    if (b < 2 || options.quota > b) {
      result.warnings.push_back("skipping b=" + std::to_string(b) + ": quota does not fit");
      continue;
    }
    if (rows > corpus->size()) {
      result.warnings.push_back("skipping b=" + std::to_string(b) + ": needs " + std::to_string(rows) +
                                " rows, corpus has " + std::to_string(corpus->size()));
      continue;
    }
    EmbeddingCorpus slice;
    slice.ids.assign(corpus->ids.begin(), corpus->ids.begin() + static_cast<std::ptrdiff_t>(rows));
    slice.features = corpus->features.topRows(static_cast<Eigen::Index>(rows));

    SelectionConfig config;
    config.batch_scale = b;
    config.budget_fraction = static_cast<double>(options.quota) / static_cast<double>(b);
    config.seed = options.seed;
    config.method = options.method;
    config.workers = 1;

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < options.repeats; ++r) {
      const auto started = std::chrono::steady_clock::now();
      const auto selection = select_corpus(slice, config);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (selection.selected_ids.size() != options.quota * options.batches) {
        throw ValidationError("bench selection returned an unexpected count");
      }
      best = std::min(best, elapsed);
    }
    BenchRow row{b, options.quota, corpus->dim(), best / static_cast<double>(options.batches), best};
    result.rows.push_back(row);
    xs.push_back(static_cast<double>(b));
    ys.push_back(row.seconds_per_batch);
  }
  if (xs.size() >= 2) {
    result.exponent = log_log_slope(xs, ys);
  } else {
    result.warnings.push_back("fewer than two grid points; no exponent fitted");
    result.exponent = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace disf
