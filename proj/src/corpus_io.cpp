#include "disf/corpus_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "disf/error.hpp"
#include "disf/rng.hpp"

namespace disf {

static_assert(std::endian::native == std::endian::little,
              "DISF files are little-endian; big-endian hosts need byte swapping");

namespace {

constexpr std::array<char, 4> kMagic{'D', 'I', 'S', 'F'};

std::string quoted(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const char* bytes) {
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::vector<std::string> read_ids(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open id sidecar " + quoted(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(std::move(line));
  }
  return ids;
}

EmbeddingCorpus read_binary(const std::filesystem::path& path, const std::string& bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw TruncationError("header of " + quoted(path) + " is truncated");
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError(quoted(path) + " does not start with the DISF magic");
  }
  const auto version = get<std::uint32_t>(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw FormatError(quoted(path) + " has unsupported version " + std::to_string(version));
  }
  const auto d = get<std::uint32_t>(bytes.data() + 8);
  const auto n = get<std::uint64_t>(bytes.data() + 12);

  const std::uint64_t values = n * d;
  if (d != 0 && values / d != n) throw FormatError(quoted(path) + " has an overflowing shape");
  const std::uint64_t payload = values * sizeof(float);
  const std::uint64_t available = bytes.size() - kHeaderBytes;
  if (available < payload) {
    throw TruncationError(quoted(path) + " holds " + std::to_string(available) +
                          " payload bytes, expected " + std::to_string(payload));
  }
  if (available > payload) {
    throw FormatError(quoted(path) + " has " + std::to_string(available - payload) +
                      " trailing bytes");
  }

  EmbeddingCorpus corpus;
  corpus.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  if (payload > 0) std::memcpy(corpus.features.data(), bytes.data() + kHeaderBytes, payload);

  corpus.ids = read_ids(ids_sidecar_path(path));
  if (corpus.ids.size() != n) {
    throw MismatchError(quoted(ids_sidecar_path(path)) + " lists " +
                        std::to_string(corpus.ids.size()) + " ids for " + std::to_string(n) +
                        " rows");
  }
  return corpus;
}

EmbeddingCorpus read_jsonl(const std::filesystem::path& path, const std::string& bytes) {
  std::istringstream in(bytes);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = quoted(path) + " line " + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
        !record.contains("embedding") || !record["embedding"].is_array()) {
      throw FormatError(where + ": expected {\"id\": string, \"embedding\": [numbers]}");
    }
    std::vector<float> row;
    row.reserve(record["embedding"].size());
    for (const auto& v : record["embedding"]) {
      if (!v.is_number()) throw FormatError(where + ": embedding holds a non-number");
      row.push_back(v.get<float>());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw MismatchError(where + ": embedding has " + std::to_string(row.size()) +
                          " values, expected " + std::to_string(rows.front().size()));
    }
    ids.push_back(record["id"].get<std::string>());
    rows.push_back(std::move(row));
  }

  EmbeddingCorpus corpus;
  corpus.ids = std::move(ids);
  const auto d = rows.empty() ? 0 : rows.front().size();
  corpus.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      corpus.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return corpus;
}

}  // namespace

void EmbeddingCorpus::validate() const {
  if (static_cast<Eigen::Index>(ids.size()) != features.rows()) {
    throw ValidationError(std::to_string(ids.size()) + " ids for " +
                          std::to_string(features.rows()) + " feature rows");
  }
  if (features.cols() < 2) {
    throw ValidationError("feature dimension must be at least 2, got " +
                          std::to_string(features.cols()));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
  }
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (!features.row(i).allFinite()) {
      throw ValidationError("row " + std::to_string(i) + " ('" + ids[static_cast<std::size_t>(i)] +
                            "') contains NaN or Inf");
    }
  }
}

bool EmbeddingCorpus::operator==(const EmbeddingCorpus& other) const {
  if (ids != other.ids) return false;
  if (features.rows() != other.features.rows() || features.cols() != other.features.cols()) {
    return false;
  }
  const auto bytes = static_cast<std::size_t>(features.size()) * sizeof(float);
  return bytes == 0 || std::memcmp(features.data(), other.features.data(), bytes) == 0;
}

EmbeddingCorpus merge_corpora(std::span<const EmbeddingCorpus> shards) {
  if (shards.empty()) throw ArgumentError("no shards to merge");
  const auto d = shards.front().features.cols();
  Eigen::Index rows = 0;
  for (const auto& shard : shards) {
    if (shard.features.cols() != d) {
      throw MismatchError("shard dimension " + std::to_string(shard.features.cols()) +
                          " differs from " + std::to_string(d));
    }
    rows += shard.features.rows();
  }
  EmbeddingCorpus merged;
  merged.ids.reserve(static_cast<std::size_t>(rows));
  merged.features.resize(rows, d);
  Eigen::Index at = 0;
  for (const auto& shard : shards) {
    merged.ids.insert(merged.ids.end(), shard.ids.begin(), shard.ids.end());
    merged.features.middleRows(at, shard.features.rows()) = shard.features;
    at += shard.features.rows();
  }
  merged.validate();
  return merged;
}

std::filesystem::path ids_sidecar_path(const std::filesystem::path& corpus_path) {
  auto sidecar = corpus_path;
  sidecar += ".ids";
  return sidecar;
}

EmbeddingCorpus read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + quoted(path));
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + quoted(path));

  EmbeddingCorpus corpus;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic.data(), 4) == 0) {
    corpus = read_binary(path, bytes);
  } else {
    const auto first = bytes.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || bytes[first] != '{') {
      throw FormatError(quoted(path) + " is neither a DISF binary file nor JSONL");
    }
    corpus = read_jsonl(path, bytes);
  }
  corpus.validate();
  return corpus;
}

void write_embeddings(const EmbeddingCorpus& corpus, const std::filesystem::path& path) {
  corpus.validate();
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + quoted(path));
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(corpus.dim()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(corpus.size()));
    out.write(reinterpret_cast<const char*>(corpus.features.data()),
              static_cast<std::streamsize>(corpus.features.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + quoted(path));
  }
  const auto sidecar = ids_sidecar_path(path);
  std::ofstream ids(sidecar, std::ios::binary | std::ios::trunc);
  if (!ids) throw IoError("cannot create " + quoted(sidecar));
  for (const auto& id : corpus.ids) ids << id << '\n';
  if (!ids) throw IoError("failed writing " + quoted(sidecar));
}

void FeaturizerConfig::validate() const {
  if (dimension < 2) throw ArgumentError("featurizer dimension must be at least 2");
  if (dimension > 0xFFFFFFFFu) throw ArgumentError("featurizer dimension does not fit in u32");
  if (ngram_orders.empty()) throw ArgumentError("featurizer needs at least one n-gram order");
  if (*ngram_orders.begin() < 1) throw ArgumentError("n-gram orders must be >= 1");
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

namespace {

// Length of the UTF-8 White_Space sequence starting at text[i], or 0.
std::size_t whitespace_length(std::string_view text, std::size_t i) {
  const auto byte = [&](std::size_t k) -> unsigned {
    return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0u;
  };
  const unsigned b0 = byte(0);
  if (b0 == 0x20 || (b0 >= 0x09 && b0 <= 0x0D)) return 1;
  if (b0 == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  if (b0 == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;  // U+1680
  if (b0 == 0xE2 && byte(1) == 0x80) {
    const unsigned b2 = byte(2);
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) return 3;
  }
  if (b0 == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
  if (b0 == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    if (const auto ws = whitespace_length(text, i); ws > 0) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      i += ws;
    } else {
      current.push_back(text[i]);
      ++i;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingCorpus featurize_text(std::span<const Document> documents, const FeaturizerConfig& config) {
  config.validate();
  if (documents.empty()) throw ArgumentError("no documents to featurize");

  const auto d = config.dimension;
  EmbeddingCorpus corpus;
  corpus.ids.reserve(documents.size());
  corpus.features.setZero(static_cast<Eigen::Index>(documents.size()), static_cast<Eigen::Index>(d));

  std::vector<double> row(d);
  std::string gram;
  for (std::size_t r = 0; r < documents.size(); ++r) {
    const auto& doc = documents[r];
    corpus.ids.push_back(doc.id);

    std::string text = doc.text;
    if (config.lowercase) {
      for (auto& c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
    }
    const auto tokens = split_whitespace(text);

    std::fill(row.begin(), row.end(), 0.0);
    for (const auto order : config.ngram_orders) {
      if (tokens.size() < order) continue;
      for (std::size_t start = 0; start + order <= tokens.size(); ++start) {
        gram = tokens[start];
        for (std::size_t k = 1; k < order; ++k) {
          gram.push_back(' ');
          gram += tokens[start + k];
        }
        const auto hash = fnv1a64(gram);
        row[hash % d] += (hash >> 63) == 0 ? 1.0 : -1.0;
      }
    }

    double norm_sq = 0.0;
    for (const double v : row) norm_sq += v * v;
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (std::size_t j = 0; j < d; ++j) {
        corpus.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
            static_cast<float>(row[j] * inv);
      }
    }
  }
  corpus.validate();
  return corpus;
}

BatchPartition partition_batches(std::size_t n, std::size_t batch_scale, std::uint64_t seed,
                                 PartitionOptions options) {
  if (batch_scale < 2) {
    throw ArgumentError("batch scale must be at least 2, got " + std::to_string(batch_scale));
  }
  auto order = iota_indices(n);
  if (options.shuffle) {
    SplitMix64 rng(seed);
    shuffle(order, rng);
  }

  BatchPartition partition;
  partition.batch_scale = batch_scale;
  partition.seed = seed;
  const std::size_t count = options.strict ? n / batch_scale : (n + batch_scale - 1) / batch_scale;
  partition.batches.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const auto begin = order.begin() + static_cast<std::ptrdiff_t>(b * batch_scale);
    const auto end = order.begin() + static_cast<std::ptrdiff_t>(std::min(n, (b + 1) * batch_scale));
    partition.batches.emplace_back(begin, end);
  }
  return partition;
}

}  // namespace disf
