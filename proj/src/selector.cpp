#include "disf/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "disf/error.hpp"
#include "disf/feature_stats.hpp"
#include "disf/parallel.hpp"

namespace disf {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::disf: return "disf";
    case Method::logdet: return "logdet";
    case Method::facility: return "facility";
    case Method::random: return "random";
    case Method::centroid: return "centroid";
  }
  return "unknown";
}

std::string_view to_string(NormScope scope) noexcept {
  return scope == NormScope::batch ? "batch" : "corpus";
}

Method parse_method(std::string_view name) {
  for (const auto m : {Method::disf, Method::logdet, Method::facility, Method::random, Method::centroid}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown selection method '" + std::string(name) + "'");
}

NormScope parse_norm_scope(std::string_view name) {
  if (name == "batch") return NormScope::batch;
  if (name == "corpus") return NormScope::corpus;
  throw ArgumentError("unknown normalization scope '" + std::string(name) + "'");
}

void SelectionConfig::validate() const {
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
    throw ArgumentError("budget fraction must lie in (0, 1], got " + std::to_string(budget_fraction));
  }
  if (batch_scale < 2) throw ArgumentError("batch scale must be at least 2");
  if (std::floor(static_cast<double>(batch_scale) * budget_fraction + 1e-9) < 1.0) {
    throw ArgumentError("budget fraction " + std::to_string(budget_fraction) + " gives no sample per batch of " +
                        std::to_string(batch_scale));
  }
  if (workers < 1) throw ArgumentError("workers must be at least 1");
}

std::size_t batch_quota(std::size_t batch_size, double fraction) {
  if (batch_size == 0) return 0;
  const auto raw = std::floor(static_cast<double>(batch_size) * fraction + 1e-9);
  const auto quota = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(quota, batch_size);
}

std::size_t SelectionResult::quota_total() const noexcept {
  std::size_t total = 0;
  for (const auto& batch : per_batch) total += batch.quota;
  return total;
}

namespace {

void check_quota(std::size_t quota) {
  if (quota < 1) throw ArgumentError("quota must be at least 1");
}

void check_first(std::size_t first, Eigen::Index m) {
  if (m < 1) throw ArgumentError("batch is empty");
  if (first >= static_cast<std::size_t>(m)) {
    throw ArgumentError("first pick " + std::to_string(first) + " outside batch of " + std::to_string(m));
  }
}

// Index of the best candidate. Candidates are visited in ascending order and
// only a strictly larger score replaces the incumbent, so exact ties resolve
// to the smallest index.
template <typename Score>
std::size_t argmax_remaining(const std::vector<bool>& taken, Score&& score, double& best_score) {
  std::size_t best = taken.size();
  best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < taken.size(); ++c) {
    if (taken[c]) continue;
    const double s = score(c);
    if (best == taken.size() || s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

}  // namespace

GreedyResult greedy_select_batch_from(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                                      std::size_t first) {
  check_quota(quota);
  check_first(first, z.rows());
  const auto m = static_cast<std::size_t>(z.rows());
  const auto k = std::min(quota, m);

  GreedyResult result;
  result.indices.reserve(k);
  result.indices.push_back(first);
  if (k > 1) result.trace.reserve(k - 1);

  std::vector<bool> taken(m, false);
  taken[first] = true;

  // Per-candidate z^T S z against the running Gram sum S. Adding x to S
  // adds (z . x)^2 to each, so a step costs O(m d) instead of O(m d^2).
  const Eigen::VectorXd sq_norm = z.rowwise().squaredNorm();
  Eigen::VectorXd quad = (z * z.row(static_cast<Eigen::Index>(first)).transpose()).array().square();
  double frob_sq = sq_norm(static_cast<Eigen::Index>(first)) * sq_norm(static_cast<Eigen::Index>(first));
  std::size_t count = 1;

  while (result.indices.size() < k) {
    double best_score = 0.0;
    const auto best = argmax_remaining(
        taken,
        [&](std::size_t c) {
          const auto i = static_cast<Eigen::Index>(c);
          return proxy_from_gram(frob_sq + 2.0 * quad(i) + sq_norm(i) * sq_norm(i), count + 1);
        },
        best_score);
    const auto b = static_cast<Eigen::Index>(best);
    frob_sq += 2.0 * quad(b) + sq_norm(b) * sq_norm(b);
    ++count;
    taken[best] = true;
    result.indices.push_back(best);
    result.trace.push_back(best_score);
    if (result.indices.size() < k) quad.array() += (z * z.row(b).transpose()).array().square();
  }
  return result;
}

GreedyResult greedy_select_batch(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                                 SplitMix64& rng) {
  check_quota(quota);
  if (z.rows() < 1) throw ArgumentError("batch is empty");
  const auto first = static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(z.rows())));
  return greedy_select_batch_from(z, quota, first);
}

namespace {

// C(m, k), saturating at cap + 1 so callers can compare against a guard.
std::uint64_t binomial_saturating(std::uint64_t m, std::uint64_t k, std::uint64_t cap) {
  k = std::min(k, m - k);
  // value holds C(m - k + i, i) after step i, so each division is exact.
  std::uint64_t value = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    std::uint64_t product = 0;
    if (__builtin_mul_overflow(value, m - k + i, &product)) return cap + 1;
    value = product / i;
    if (value > cap) return cap + 1;
  }
  return value;
}

}  // namespace

BestSubset brute_force_best_subset(const Eigen::Ref<const RowMatrixXd>& z, std::size_t k,
                                   std::uint64_t guard) {
  const auto m = static_cast<std::size_t>(z.rows());
  if (k < 2 || k > m) {
    throw ArgumentError("exhaustive search needs 2 <= k <= m, got k=" + std::to_string(k) +
                        ", m=" + std::to_string(m));
  }
  const auto combos = binomial_saturating(m, k, guard);
  if (combos > guard) {
    throw RefusalError("C(" + std::to_string(m) + ", " + std::to_string(k) +
                       ") subsets exceeds the exhaustive-search limit of " + std::to_string(guard));
  }

  std::vector<std::size_t> current(k);
  std::iota(current.begin(), current.end(), std::size_t{0});
  BestSubset best;
  best.value = -1.0;
  RowMatrixXd rows(static_cast<Eigen::Index>(k), z.cols());
  for (;;) {
    for (std::size_t i = 0; i < k; ++i) rows.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(current[i]));
    const double value = proxy_value(rows);
    if (value > best.value) {
      best.value = value;
      best.indices = current;
    }
    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && current[i - 1] == m - k + (i - 1)) --i;
    if (i == 0) break;
    ++current[i - 1];
    for (std::size_t j = i; j < k; ++j) current[j] = current[j - 1] + 1;
  }
  return best;
}

std::vector<std::size_t> select_random(std::size_t m, std::size_t quota, SplitMix64& rng) {
  quota = std::min(quota, m);
  auto pool = iota_indices(m);
  // Partial Fisher-Yates: the first `quota` slots end up a uniform sample.
  for (std::size_t i = 0; i < quota; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.bounded(m - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(quota);
  return pool;
}

std::vector<std::string> select_random(std::span<const std::string> ids, std::size_t quota,
                                       SplitMix64& rng) {
  std::vector<std::string> out;
  for (const auto i : select_random(ids.size(), quota, rng)) out.push_back(ids[i]);
  return out;
}

namespace {

// log det(I + gram / scale) through a Cholesky factor; I + PSD is SPD.
double logdet_identity_plus(const Eigen::MatrixXd& gram, double scale) {
  Eigen::MatrixXd m = gram / scale;
  m.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw ValidationError("I + C is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double logdet_value(const Eigen::Ref<const RowMatrixXd>& z_rows) {
  return logdet_identity_plus(covariance(z_rows).C, 1.0);
}

GreedyResult select_logdet_from(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                                std::size_t first) {
  check_quota(quota);
  check_first(first, z.rows());
  const auto m = static_cast<std::size_t>(z.rows());
  const auto k = std::min(quota, m);

  GreedyResult result;
  result.indices.push_back(first);
  std::vector<bool> taken(m, false);
  taken[first] = true;
  Eigen::MatrixXd gram = z.row(static_cast<Eigen::Index>(first)).transpose() * z.row(static_cast<Eigen::Index>(first));
  Eigen::MatrixXd trial(gram.rows(), gram.cols());

  while (result.indices.size() < k) {
    const double scale = static_cast<double>(result.indices.size());  // (|U| + 1) - 1
    double best_score = 0.0;
    const auto best = argmax_remaining(
        taken,
        [&](std::size_t c) {
          const auto row = z.row(static_cast<Eigen::Index>(c));
          trial = gram;
          trial.noalias() += row.transpose() * row;
          return logdet_identity_plus(trial, scale);
        },
        best_score);
    const auto row = z.row(static_cast<Eigen::Index>(best));
    gram.noalias() += row.transpose() * row;
    taken[best] = true;
    result.indices.push_back(best);
    result.trace.push_back(best_score);
  }
  return result;
}

GreedyResult select_logdet(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota, SplitMix64& rng) {
  check_quota(quota);
  if (z.rows() < 1) throw ArgumentError("batch is empty");
  const auto first = static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(z.rows())));
  return select_logdet_from(z, quota, first);
}

namespace {

RowMatrixXd l2_normalized(const Eigen::Ref<const RowMatrixXd>& raw) {
  RowMatrixXd out = raw;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

}  // namespace

GreedyResult select_facility_location(const Eigen::Ref<const RowMatrixXd>& raw, std::size_t quota) {
  check_quota(quota);
  const auto m = static_cast<std::size_t>(raw.rows());
  const auto k = std::min(quota, m);
  const RowMatrixXd unit = l2_normalized(raw);
  const RowMatrixXd sim = unit * unit.transpose();

  GreedyResult result;
  std::vector<bool> taken(m, false);
  Eigen::VectorXd cover = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  double coverage = 0.0;
  while (result.indices.size() < k) {
    double best_gain = 0.0;
    const auto best = argmax_remaining(
        taken,
        [&](std::size_t c) {
          return (sim.row(static_cast<Eigen::Index>(c)).transpose() - cover).cwiseMax(0.0).sum();
        },
        best_gain);
    cover = cover.cwiseMax(sim.row(static_cast<Eigen::Index>(best)).transpose());
    coverage = cover.sum();
    taken[best] = true;
    result.indices.push_back(best);
    result.trace.push_back(coverage);
  }
  return result;
}

std::vector<std::size_t> select_centroid_topk(const Eigen::Ref<const RowMatrixXd>& raw,
                                              std::size_t quota,
                                              const Eigen::Ref<const Eigen::VectorXd>& centroid) {
  if (centroid.size() != raw.cols()) {
    throw ArgumentError("centroid has dimension " + std::to_string(centroid.size()) + ", rows " +
                        std::to_string(raw.cols()));
  }
  const double centroid_norm = centroid.norm();
  if (!(centroid_norm > 0.0)) throw ArgumentError("centroid must be nonzero");

  const auto m = static_cast<std::size_t>(raw.rows());
  std::vector<double> cosine(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = raw.row(static_cast<Eigen::Index>(i));
    const double norm = row.norm();
    if (norm > 0.0) cosine[i] = row.dot(centroid) / (norm * centroid_norm);
  }
  auto order = iota_indices(m);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cosine[a] > cosine[b]; });
  order.resize(std::min(quota, m));
  return order;
}

SelectionResult select_corpus(const EmbeddingCorpus& corpus, const SelectionConfig& config) {
  config.validate();
  if (corpus.size() == 0) throw ArgumentError("corpus is empty");
  const auto d = static_cast<Eigen::Index>(corpus.dim());

  const auto partition = partition_batches(corpus.size(), config.batch_scale, config.seed,
                                           {.shuffle = config.shuffle, .strict = config.strict_batching});

  const bool needs_z = config.method == Method::disf || config.method == Method::logdet;
  std::optional<FeatureMoments> corpus_moments;
  if (needs_z && config.normalization_scope == NormScope::corpus) {
    corpus_moments = feature_moments(corpus.features.cast<double>());
  }

  Eigen::VectorXd centroid;
  if (config.method == Method::centroid) {
    if (config.centroid) {
      centroid = Eigen::Map<const Eigen::VectorXd>(config.centroid->data(),
                                                   static_cast<Eigen::Index>(config.centroid->size()));
    } else {
      centroid = corpus.features.cast<double>().colwise().mean().transpose();
    }
    if (centroid.size() != d) {
      throw ArgumentError("centroid has dimension " + std::to_string(centroid.size()) + ", corpus " +
                          std::to_string(d));
    }
    if (!(centroid.norm() > 0.0)) throw ArgumentError("centroid must be nonzero");
  }

  SelectionResult result;
  result.method = config.method;
  result.per_batch.resize(partition.batches.size());

  // One scratch matrix per worker thread, reused across that thread's batches.
  std::vector<RowMatrixXd> scratch(parallel_slots(partition.batches.size(), config.workers));

  parallel_for(partition.batches.size(), config.workers, [&](std::size_t b, std::size_t slot) {
    const auto started = std::chrono::steady_clock::now();
    const auto& members = partition.batches[b];
    const auto m = members.size();
    auto& out = result.per_batch[b];
    out.batch_index = b;
    out.batch_size = m;
    out.quota = batch_quota(m, config.budget_fraction);

    auto& buffer = scratch[slot];
    if (buffer.rows() < static_cast<Eigen::Index>(m)) buffer.resize(static_cast<Eigen::Index>(m), d);
    auto rows = buffer.topRows(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = corpus.features.row(static_cast<Eigen::Index>(members[i])).cast<double>();
    }
    SplitMix64 rng(config.seed ^ static_cast<std::uint64_t>(b));

    // disf and logdet score standardized rows; the other methods read raw ones.
    if (needs_z) {
      if (corpus_moments) {
        standardize_in_place(rows, *corpus_moments);
      } else if (m < 2) {
        rows.setZero();
      } else {
        standardize_in_place(rows, feature_moments(rows));
      }
    }

    std::vector<std::size_t> picked;
    switch (config.method) {
      case Method::disf: {
        auto greedy = greedy_select_batch(rows, out.quota, rng);
        picked = std::move(greedy.indices);
        out.trace = std::move(greedy.trace);
        break;
      }
      case Method::logdet: {
        auto greedy = select_logdet(rows, out.quota, rng);
        picked = std::move(greedy.indices);
        out.trace = std::move(greedy.trace);
        break;
      }
      case Method::facility: {
        auto greedy = select_facility_location(rows, out.quota);
        picked = std::move(greedy.indices);
        out.trace = std::move(greedy.trace);
        break;
      }
      case Method::random:
        picked = select_random(m, out.quota, rng);
        break;
      case Method::centroid:
        picked = select_centroid_topk(rows, out.quota, centroid);
        break;
    }
    out.ids.reserve(picked.size());
    for (const auto i : picked) out.ids.push_back(corpus.ids[members[i]]);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  });

  for (const auto& batch : result.per_batch) {
    result.selected_ids.insert(result.selected_ids.end(), batch.ids.begin(), batch.ids.end());
  }
  return result;
}

}  // namespace disf
