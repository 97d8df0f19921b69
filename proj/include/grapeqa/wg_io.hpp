#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "grapeqa/working_graph.hpp"

namespace grapeqa {

/// {"example_id", "stage", "option_index", "nodes": [{"id","kind","label","kg_id"}],
///  "edges": [[src, rel, dst], ...]}. Features are not serialized.
nlohmann::json wg_to_json(const WorkingGraph& wg, std::string_view example_id, std::string_view stage);

struct TaggedGraph {
  std::string example_id;
  std::string stage;
  WorkingGraph graph;
};

/// Throws DataError on a malformed record.
TaggedGraph wg_from_json(const nlohmann::json& j, const RelationSpace& relations);

}  // namespace grapeqa
