#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "grapeqa/embedding.hpp"
#include "grapeqa/kg.hpp"
#include "grapeqa/working_graph.hpp"

namespace grapeqa {

enum class Pos { Det, Adj, Noun, Other };

class PosLexicon {
 public:
  /// JSONL {"token": string, "pos": "DET"|"ADJ"|"NOUN"|"OTHER"}.
  static PosLexicon load(const std::filesystem::path& path);
  static PosLexicon parse(std::string_view jsonl);

  void add(std::string_view token, Pos pos);
  /// Unknown tokens are Other. Lookup is on the normalized token.
  Pos lookup(std::string_view token) const;
  std::size_t size() const { return tags_.size(); }

 private:
  std::unordered_map<std::string, Pos> tags_;
};

/// A chunk with a byte span into the context text "question option".
struct NounChunk {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  TextSource source = TextSource::Question;
  friend bool operator==(const NounChunk&, const NounChunk&) = default;
};

/// Precomputed chunks keyed by (example id, option index).
class ChunkTable {
 public:
  /// JSONL {"example_id": string, "option_idx": int, "chunks": [{"text","start","end"}]}.
  static ChunkTable load(const std::filesystem::path& path);
  static ChunkTable parse(std::string_view jsonl);

  const std::vector<NounChunk>* find(const std::string& example_id, int option_idx) const;
  std::size_t size() const { return table_.size(); }

 private:
  // Source tags are resolved later, against the request's question length.
  std::map<std::pair<std::string, int>, std::vector<NounChunk>> table_;
};

/// determiner? adjective* noun+ runs over lexicon tags.
struct RuleBasedChunker {
  std::shared_ptr<const PosLexicon> lexicon;
};

/// ceil(fraction * word count) words sampled without replacement.
struct RandomWordsChunker {
  double fraction = 0.2;
  std::uint64_t seed = 0;
};

struct ExternalChunker {
  std::shared_ptr<const ChunkTable> table;
};

using Chunker = std::variant<RuleBasedChunker, RandomWordsChunker, ExternalChunker>;

struct ChunkRequest {
  std::string example_id;
  int option_idx = 0;
  std::string_view question;
  std::string_view option;
};

/// Chunks of the QA pair, ordered by span start and deduplicated by
/// normalized text (first occurrence kept).
std::vector<NounChunk> extract_chunks(const Chunker& chunker, const ChunkRequest& request);

/// Adds one NounChunk node per distinct chunk, with chunk-chunk edges over
/// every unordered pair and chunk-other edges to every pre-existing node, each
/// paired with its inverse. Chunk features are sub-token means. Throws
/// std::logic_error if the graph already holds NounChunk nodes or lacks a
/// Context node.
WorkingGraph augment(WorkingGraph wg, const std::vector<NounChunk>& chunks, const EmbeddingProvider& provider);

}  // namespace grapeqa
