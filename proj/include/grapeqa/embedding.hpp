#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grapeqa {

using Vec = std::vector<double>;

/// Text -> vector service standing in for a language-model encoder.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  /// Encodes a whole text. Throws DataError when the text cannot be encoded.
  virtual Vec embed(std::string_view text) const = 0;
  /// Sub-word tokens of `text`, each of which can be passed to embed().
  virtual std::vector<std::string> subtokens(std::string_view text) const = 0;
};

/// Deterministic feature-hashing provider.
///
/// Every distinct normalized string maps to an independent pseudo-random
/// vector with i.i.d. N(0, 1/dim) entries seeded from (seed, string). A
/// multi-word text therefore gets a vector unrelated to its words' vectors;
/// sub-tokens are the normalized whitespace tokens.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  HashEmbeddingProvider(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const override { return dim_; }
  Vec embed(std::string_view text) const override;
  std::vector<std::string> subtokens(std::string_view text) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Provider backed by precomputed vectors.
///
/// JSONL, one record per line: {"key": text, "vector": [reals...],
/// "subtokens": [strings...]} where "subtokens" is optional. Lookups use the
/// exact key; every record must share one dimension.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  static FileEmbeddingProvider load(const std::filesystem::path& path);
  static FileEmbeddingProvider parse(std::string_view jsonl);

  std::size_t dim() const override { return dim_; }
  Vec embed(std::string_view text) const override;
  std::vector<std::string> subtokens(std::string_view text) const override;
  std::size_t size() const { return vectors_.size(); }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vec> vectors_;
  std::unordered_map<std::string, std::vector<std::string>> subtokens_;
};

/// Mean of the provider's sub-token vectors for `text`.
Vec mean_subtoken_embedding(const EmbeddingProvider& provider, std::string_view text);

}  // namespace grapeqa
