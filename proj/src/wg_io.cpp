#include "grapeqa/wg_io.hpp"

#include <algorithm>

#include "grapeqa/errors.hpp"

namespace grapeqa {

using nlohmann::json;

json wg_to_json(const WorkingGraph& wg, std::string_view example_id, std::string_view stage) {
  json nodes = json::array();
  for (const auto& n : wg.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"label", n.label},
                     {"kg_id", n.kg_id ? json(*n.kg_id) : json(nullptr)}});
  }
  json edges = json::array();
  for (const auto& e : wg.edges) edges.push_back({e.src, e.rel, e.dst});
  return {{"example_id", example_id}, {"stage", stage},   {"option_index", wg.option_index},
          {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

TaggedGraph wg_from_json(const json& j, const RelationSpace& relations) {
  TaggedGraph out;
  try {
    out.example_id = j.at("example_id").get<std::string>();
    out.stage = j.at("stage").get<std::string>();
    auto& wg = out.graph;
    wg.relations = relations;
    wg.option_index = j.at("option_index").get<int>();
    for (const auto& n : j.at("nodes")) {
      WgNode node{n.at("id").get<LocalId>(), node_kind_from_string(n.at("kind").get<std::string>()),
                  n.at("label").get<std::string>(), std::nullopt};
      if (!n.at("kg_id").is_null()) node.kg_id = n.at("kg_id").get<ConceptId>();
      wg.nodes.push_back(std::move(node));
    }
    std::sort(wg.nodes.begin(), wg.nodes.end(), [](const WgNode& a, const WgNode& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < wg.nodes.size(); ++i) {
      if (wg.nodes[i].id == wg.nodes[i - 1].id) throw DataError("duplicate node id " + std::to_string(wg.nodes[i].id));
    }
    for (const auto& e : j.at("edges")) {
      WgEdge edge{e.at(0).get<LocalId>(), e.at(1).get<RelationId>(), e.at(2).get<LocalId>()};
      if (!relations.valid(edge.rel)) throw DataError("edge relation " + std::to_string(edge.rel) + " out of range");
      if (!wg.find(edge.src) || !wg.find(edge.dst)) throw DataError("edge references a missing node");
      wg.edges.push_back(edge);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed working graph record: ") + e.what());
  }
  return out;
}

}  // namespace grapeqa
