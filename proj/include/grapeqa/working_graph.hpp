#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grapeqa/embedding.hpp"
#include "grapeqa/kg.hpp"

namespace grapeqa {

using LocalId = std::int32_t;

enum class NodeKind { Context = 0, QuestionEntity = 1, AnswerEntity = 2, ExtraNode = 3, NounChunk = 4 };
inline constexpr std::size_t kNumNodeKinds = 5;

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

struct WgNode {
  LocalId id = 0;
  NodeKind kind = NodeKind::Context;
  std::string label;
  std::optional<ConceptId> kg_id;
  friend bool operator==(const WgNode&, const WgNode&) = default;
};

struct WgEdge {
  LocalId src = 0;
  RelationId rel = 0;
  LocalId dst = 0;
  friend bool operator==(const WgEdge&, const WgEdge&) = default;
  friend auto operator<=>(const WgEdge&, const WgEdge&) = default;
};

/// Per-(question, option) typed multigraph.
///
/// Local ids are stable: pruning removes nodes without renumbering the rest,
/// so ids may be sparse. `nodes` is kept sorted by id.
struct WorkingGraph {
  int option_index = 0;
  RelationSpace relations;
  std::string question;
  std::string option;
  std::vector<WgNode> nodes;
  std::vector<WgEdge> edges;
  std::map<LocalId, Vec> features;
  /// Relevance score per KG-derived node, and the head embedding it came from.
  std::map<LocalId, double> relevance;
  std::map<LocalId, Vec> relevance_embedding;

  const WgNode* find(LocalId id) const;
  const WgNode* context_node() const;
  std::size_t count(NodeKind kind) const;
  std::vector<LocalId> ids_of(NodeKind kind) const;
  LocalId next_id() const { return nodes.empty() ? 0 : nodes.back().id + 1; }

  /// Removes the given nodes together with every incident edge and their
  /// feature/relevance entries.
  void remove_nodes(const std::vector<LocalId>& ids);

  /// Same nodes, edges and ids (features and scores are not compared).
  bool same_structure(const WorkingGraph& other) const;
};

/// Bridging sub-graph between question and answer entities.
///
/// Nodes: question entities, answer entities, and every KG node adjacent to
/// both some question entity and some answer entity (paths of length 2).
/// Edges: all KG edges among the chosen nodes. A concept matched by both the
/// question and the option becomes an AnswerEntity. Local ids are assigned
/// question entities first, then answer entities, then extra nodes, each in
/// ascending concept-id order.
WorkingGraph extract_subgraph(const KnowledgeGraph& kg, const std::vector<EntityMatch>& q_matches,
                              const std::vector<EntityMatch>& a_matches);

/// Adds the QA context node and context edges in both directions to every
/// existing node. Throws std::logic_error if a Context node already exists.
WorkingGraph build_working_graph(WorkingGraph sub, std::string_view question, std::string_view option);

/// Context feature = provider(context text); KG node features = provider(label).
/// Noun-chunk nodes, if present, get the mean of their sub-token vectors.
/// Throws std::invalid_argument when provider.dim() != expected_dim and
/// DataError (naming the node) when the provider fails.
WorkingGraph init_node_features(WorkingGraph wg, const EmbeddingProvider& provider,
                                std::size_t expected_dim);

}  // namespace grapeqa
