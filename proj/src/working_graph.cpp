#include "grapeqa/working_graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "grapeqa/errors.hpp"
#include "grapeqa/text.hpp"

namespace grapeqa {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Context: return "context";
    case NodeKind::QuestionEntity: return "question_entity";
    case NodeKind::AnswerEntity: return "answer_entity";
    case NodeKind::ExtraNode: return "extra";
    case NodeKind::NounChunk: return "noun_chunk";
  }
  return "unknown";
}

NodeKind node_kind_from_string(std::string_view name) {
  for (std::size_t k = 0; k < kNumNodeKinds; ++k) {
    auto kind = static_cast<NodeKind>(k);
    if (to_string(kind) == name) return kind;
  }
  throw DataError("unknown node kind \"" + std::string(name) + "\"");
}

const WgNode* WorkingGraph::find(LocalId id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const WgNode& n, LocalId v) { return n.id < v; });
  return it != nodes.end() && it->id == id ? &*it : nullptr;
}

const WgNode* WorkingGraph::context_node() const {
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Context) return &n;
  }
  return nullptr;
}

std::size_t WorkingGraph::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [kind](const WgNode& n) { return n.kind == kind; }));
}

std::vector<LocalId> WorkingGraph::ids_of(NodeKind kind) const {
  std::vector<LocalId> out;
  for (const auto& n : nodes) {
    if (n.kind == kind) out.push_back(n.id);
  }
  return out;
}

void WorkingGraph::remove_nodes(const std::vector<LocalId>& ids) {
  if (ids.empty()) return;
  const std::set<LocalId> gone(ids.begin(), ids.end());
  std::erase_if(nodes, [&](const WgNode& n) { return gone.count(n.id) != 0; });
  std::erase_if(edges, [&](const WgEdge& e) { return gone.count(e.src) != 0 || gone.count(e.dst) != 0; });
  for (LocalId id : gone) {
    features.erase(id);
    relevance.erase(id);
    relevance_embedding.erase(id);
  }
}

bool WorkingGraph::same_structure(const WorkingGraph& other) const {
  return option_index == other.option_index && nodes == other.nodes && edges == other.edges;
}

WorkingGraph extract_subgraph(const KnowledgeGraph& kg, const std::vector<EntityMatch>& q_matches,
                              const std::vector<EntityMatch>& a_matches) {
  std::set<ConceptId> answers;
  for (const auto& m : a_matches) answers.insert(m.concept_id);
  std::set<ConceptId> questions;
  for (const auto& m : q_matches) {
    if (answers.count(m.concept_id) == 0) questions.insert(m.concept_id);
  }

  std::set<ConceptId> extras;
  if (!answers.empty()) {
    for (ConceptId q : questions) {
      for (const auto& nb : kg.neighbors(q)) {
        const ConceptId s = nb.node;
        if (questions.count(s) != 0 || answers.count(s) != 0 || extras.count(s) != 0) continue;
        const bool bridges = std::any_of(answers.begin(), answers.end(),
                                         [&](ConceptId a) { return kg.adjacent(s, a); });
        if (bridges) extras.insert(s);
      }
    }
  }

  WorkingGraph wg;
  wg.relations = kg.relation_space();
  std::map<ConceptId, LocalId> local;
  auto add = [&](ConceptId c, NodeKind kind) {
    const auto id = static_cast<LocalId>(wg.nodes.size());
    wg.nodes.push_back({id, kind, kg.label(c), c});
    local.emplace(c, id);
  };
  for (ConceptId c : questions) add(c, NodeKind::QuestionEntity);
  for (ConceptId c : answers) add(c, NodeKind::AnswerEntity);
  for (ConceptId c : extras) add(c, NodeKind::ExtraNode);

  for (const auto& [cid, id] : local) {
    for (const auto& nb : kg.neighbors(cid)) {
      auto it = local.find(nb.node);
      if (it != local.end()) wg.edges.push_back({id, nb.rel, it->second});
    }
  }
  std::sort(wg.edges.begin(), wg.edges.end());
  return wg;
}

WorkingGraph build_working_graph(WorkingGraph sub, std::string_view question, std::string_view option) {
  if (sub.context_node() != nullptr) throw std::logic_error("working graph already has a context node");
  const LocalId z = sub.next_id();
  const auto& rs = sub.relations;
  for (const auto& n : sub.nodes) {
    sub.edges.push_back({z, rs.context(), n.id});
    sub.edges.push_back({n.id, rs.context_inverse(), z});
  }
  sub.question = std::string(question);
  sub.option = std::string(option);
  sub.nodes.push_back({z, NodeKind::Context, context_text(question, option), std::nullopt});
  return sub;
}

WorkingGraph init_node_features(WorkingGraph wg, const EmbeddingProvider& provider,
                                std::size_t expected_dim) {
  if (provider.dim() != expected_dim) {
    throw std::invalid_argument("embedding provider dimension " + std::to_string(provider.dim()) +
                                " does not match expected " + std::to_string(expected_dim));
  }
  for (const auto& n : wg.nodes) {
    try {
      wg.features[n.id] = n.kind == NodeKind::NounChunk ? mean_subtoken_embedding(provider, n.label)
                                                        : provider.embed(n.label);
    } catch (const DataError& e) {
      throw DataError("node " + std::to_string(n.id) + " (" + std::string(to_string(n.kind)) +
                      "): " + e.what());
    }
  }
  return wg;
}

}  // namespace grapeqa
