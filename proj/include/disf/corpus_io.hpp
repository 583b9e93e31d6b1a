#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disf/matrix.hpp"

namespace disf {

/// Sample identifiers paired with an n x d float feature matrix.
struct EmbeddingCorpus {
  std::vector<std::string> ids;
  RowMatrixXf features;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }

  // Throws ValidationError when ids/rows disagree, ids repeat, d < 2 or an
  // entry is not finite.
  void validate() const;

  bool operator==(const EmbeddingCorpus& other) const;
};

// Concatenates shards in order. All shards must share d and ids must stay
// unique across the merged corpus.
EmbeddingCorpus merge_corpora(std::span<const EmbeddingCorpus> shards);

// Sidecar holding one id per line next to a binary corpus: "<path>.ids".
std::filesystem::path ids_sidecar_path(const std::filesystem::path& corpus_path);

/// Reads a corpus in the DISF binary format (with its `.ids` sidecar) or in
/// JSONL form. The format is detected from the first four bytes: the
/// "DISF" magic selects the binary reader, a leading '{' the JSONL reader.
EmbeddingCorpus read_embeddings(const std::filesystem::path& path);

/// Writes the DISF binary file and its `.ids` sidecar.
///
/// Layout (little-endian): "DISF", u32 version = 1, u32 d, u64 n, followed by
/// n*d float32 values in row-major order.
void write_embeddings(const EmbeddingCorpus& corpus, const std::filesystem::path& path);

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

struct FeaturizerConfig {
  std::size_t dimension = 256;
  std::set<std::size_t> ngram_orders{1, 2};
  bool lowercase = true;

  void validate() const;
};

struct Document {
  std::string id;
  std::string text;
};

// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Splits UTF-8 text on Unicode White_Space code points. Invalid UTF-8 bytes
// are kept as part of tokens.
std::vector<std::string> split_whitespace(std::string_view text);

/// Signed feature hashing of word n-grams, one L2-normalized row per
/// document. Each n-gram (tokens joined by a single space) is hashed with
/// FNV-1a 64; the bucket is hash mod d and the sign is taken from bit 63.
/// Lowercasing touches ASCII letters only so output never depends on locale.
EmbeddingCorpus featurize_text(std::span<const Document> documents, const FeaturizerConfig& config);

/// Ordered, disjoint index batches over a corpus.
struct BatchPartition {
  std::vector<std::vector<std::size_t>> batches;
  std::size_t batch_scale = 0;
  std::uint64_t seed = 0;
};

struct PartitionOptions {
  bool shuffle = true;
  // Keep only floor(n / b) full batches and drop the remainder.
  bool strict = false;
};

BatchPartition partition_batches(std::size_t n, std::size_t batch_scale, std::uint64_t seed,
                                 PartitionOptions options = {});

}  // namespace disf
