#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grapeqa {

using ConceptId = std::int32_t;
using RelationId = std::int32_t;

/// Global relation id layout shared by the KG, working graphs and the GNN.
///
/// Declared KG relation k has forward id 2k and inverse id 2k+1. The working
/// graph relations (context, chunk-chunk, chunk-other) follow in the same
/// forward/inverse pairing, then a single self-loop relation used only inside
/// message passing.
struct RelationSpace {
  std::size_t kg_relations = 0;

  static constexpr RelationId inverse(RelationId r) { return r ^ 1; }
  static constexpr bool is_inverse(RelationId r) { return (r & 1) != 0; }

  RelationId kg_forward(std::size_t k) const { return static_cast<RelationId>(2 * k); }
  RelationId context() const { return base(); }
  RelationId context_inverse() const { return base() + 1; }
  RelationId chunk_chunk() const { return base() + 2; }
  RelationId chunk_chunk_inverse() const { return base() + 3; }
  RelationId chunk_other() const { return base() + 4; }
  RelationId chunk_other_inverse() const { return base() + 5; }
  RelationId self_loop() const { return base() + 6; }

  /// Number of relation ids a model must embed (everything above, inclusive).
  std::size_t size() const { return 2 * kg_relations + 7; }
  bool is_kg(RelationId r) const { return r >= 0 && r < base(); }
  bool valid(RelationId r) const { return r >= 0 && static_cast<std::size_t>(r) < size(); }

 private:
  RelationId base() const { return static_cast<RelationId>(2 * kg_relations); }
};

struct KgEdge {
  ConceptId src = 0;
  RelationId rel = 0;
  ConceptId dst = 0;
  friend bool operator==(const KgEdge&, const KgEdge&) = default;
};

/// Immutable concept graph with inverse edges materialized.
class KnowledgeGraph {
 public:
  struct Neighbor {
    RelationId rel;
    ConceptId node;
  };

  KnowledgeGraph() = default;

  /// Builds a graph from labels, declared relation names and forward triples
  /// (relation index into `relations`). Inverse edges are added here.
  KnowledgeGraph(std::vector<std::string> labels, std::vector<std::string> relations,
                 const std::vector<KgEdge>& forward_edges);

  std::size_t num_nodes() const { return labels_.size(); }
  std::size_t num_declared_relations() const { return relations_.size(); }
  RelationSpace relation_space() const { return RelationSpace{relations_.size()}; }

  const std::string& label(ConceptId id) const { return labels_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::string relation_name(RelationId rel) const;

  /// Every directed edge: forward edges in file order, each followed by its inverse.
  const std::vector<KgEdge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(ConceptId id) const;
  bool adjacent(ConceptId a, ConceptId b) const;

  /// Lowest concept id whose normalized label equals `normalized_label`.
  std::optional<ConceptId> find(std::string_view normalized_label) const;
  std::size_t max_label_tokens() const { return max_label_tokens_; }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> relations_;
  std::vector<KgEdge> edges_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<Neighbor> adj_;
  std::unordered_map<std::string, ConceptId> label_index_;
  std::size_t max_label_tokens_ = 0;
};

struct KgLoadOptions {
  /// Create nodes for triple labels missing from explicit node declarations.
  bool auto_create_nodes = false;
};

/// Parses the JSONL triplet format.
///
/// Each line is either a triple {"subj","rel","obj"} or a node declaration
/// {"node": label}. A file without any node declaration implicitly declares
/// every label it mentions; once a file declares nodes, triples may only
/// reference declared labels unless `auto_create_nodes` is set. Ids are
/// assigned by first appearance. Throws DataError with the 1-based line number.
KnowledgeGraph load_kg(const std::filesystem::path& path, const KgLoadOptions& options = {});
KnowledgeGraph parse_kg(std::string_view jsonl, const KgLoadOptions& options = {});

enum class TextSource { Question, Answer };

struct EntityMatch {
  ConceptId concept_id = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  TextSource source = TextSource::Question;
  friend bool operator==(const EntityMatch&, const EntityMatch&) = default;
};

/// Leftmost-longest match of normalized label n-grams (up to 4 tokens).
/// Matches are non-overlapping and ordered by span start.
std::vector<EntityMatch> link_entities(std::string_view text, const KnowledgeGraph& kg,
                                       TextSource source = TextSource::Question);

inline constexpr std::size_t kMaxLinkTokens = 4;

}  // namespace grapeqa
