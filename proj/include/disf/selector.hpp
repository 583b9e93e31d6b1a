#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "disf/corpus_io.hpp"
#include "disf/matrix.hpp"
#include "disf/rng.hpp"

namespace disf {

enum class Method { disf, logdet, facility, random, centroid };
enum class NormScope { batch, corpus };

std::string_view to_string(Method method) noexcept;
std::string_view to_string(NormScope scope) noexcept;
Method parse_method(std::string_view name);
NormScope parse_norm_scope(std::string_view name);

struct SelectionConfig {
  // |S| / |D|, the fraction of every batch that is kept.
  double budget_fraction = 0.015;
  std::size_t batch_scale = 1024;
  std::uint64_t seed = 42;
  Method method = Method::disf;
  NormScope normalization_scope = NormScope::batch;
  bool shuffle = true;
  bool strict_batching = false;
  std::size_t workers = 1;
  // Target direction for Method::centroid. Defaults to the corpus mean.
  std::optional<std::vector<double>> centroid;

  void validate() const;
};

// floor(batch_size * fraction), at least 1 for a nonempty batch and at most
// batch_size. A 1e-9 slack absorbs representation error in the product
// (0.29 * 100 must give 29).
std::size_t batch_quota(std::size_t batch_size, double fraction);

struct BatchSelection {
  std::size_t batch_index = 0;
  std::size_t batch_size = 0;
  std::size_t quota = 0;
  std::vector<std::string> ids;
  // Objective value after each pick. For disf/logdet the random first pick
  // has no defined value, so the trace holds quota - 1 entries.
  std::vector<double> trace;
  double seconds = 0.0;
};

struct SelectionResult {
  std::vector<std::string> selected_ids;
  std::vector<BatchSelection> per_batch;
  Method method = Method::disf;

  std::size_t quota_total() const noexcept;
};

struct GreedyResult {
  std::vector<std::size_t> indices;
  std::vector<double> trace;
};

/// DiSF greedy over one batch of standardized rows. The first element is
/// drawn uniformly with `rng`; each following step adds the candidate that
/// maximizes exp(-||C(U + x)||_F), ties going to the smallest index.
/// With quota >= m every row is returned, still in greedy order.
GreedyResult greedy_select_batch(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                                 SplitMix64& rng);

// Same as above with the first pick fixed.
GreedyResult greedy_select_batch_from(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                                      std::size_t first);

struct BestSubset {
  std::vector<std::size_t> indices;
  double value = 0.0;
};

inline constexpr std::uint64_t kBruteForceGuard = 1'000'000;

// Exhaustive search over all k-subsets for the maximal proxy value. Ties go
// to the lexicographically smallest index set. Throws RefusalError when
// C(m, k) exceeds `guard`.
BestSubset brute_force_best_subset(const Eigen::Ref<const RowMatrixXd>& z, std::size_t k,
                                   std::uint64_t guard = kBruteForceGuard);

// Uniform sample without replacement; quota is clamped to m.
std::vector<std::size_t> select_random(std::size_t m, std::size_t quota, SplitMix64& rng);
std::vector<std::string> select_random(std::span<const std::string> ids, std::size_t quota,
                                       SplitMix64& rng);

// log det(I + C(U)) with C scaled by 1 / (|U| - 1).
double logdet_value(const Eigen::Ref<const RowMatrixXd>& z_rows);

// Greedy maximization of logdet_value with the DiSF first-pick and tie
// rules. Recomputes the determinant for every candidate: O(d^3) each.
GreedyResult select_logdet(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                           SplitMix64& rng);
GreedyResult select_logdet_from(const Eigen::Ref<const RowMatrixXd>& z, std::size_t quota,
                                std::size_t first);

// Greedy facility location on cosine similarity of the raw rows:
// F(U) = sum_v max(0, max_{u in U} sim(u, v)). Starts from the empty set;
// the trace holds F after every pick.
GreedyResult select_facility_location(const Eigen::Ref<const RowMatrixXd>& raw, std::size_t quota);

// Top-quota rows by cosine similarity to `centroid`, ties by index.
std::vector<std::size_t> select_centroid_topk(const Eigen::Ref<const RowMatrixXd>& raw,
                                              std::size_t quota,
                                              const Eigen::Ref<const Eigen::VectorXd>& centroid);

/// Runs the configured selector batch by batch. Batches come from
/// partition_batches; each batch uses its own generator seeded with
/// seed ^ batch_index, so the output does not depend on `workers`.
SelectionResult select_corpus(const EmbeddingCorpus& corpus, const SelectionConfig& config);

}  // namespace disf
