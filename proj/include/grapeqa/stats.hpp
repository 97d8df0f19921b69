#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <string>

#include "json.hpp"

#include "grapeqa/working_graph.hpp"

namespace grapeqa {

/// Node-count statistics over a collection of working graphs.
struct StatsReport {
  std::size_t graphs = 0;
  std::array<std::size_t, kNumNodeKinds> totals{};
  std::size_t unique_chunk_labels = 0;
  std::size_t unique_kg_labels = 0;
  std::size_t overlap = 0;

  /// total / graphs rounded half-up to two decimals, as hundredths.
  long mean_hundredths(NodeKind kind) const;
  double mean(NodeKind kind) const { return static_cast<double>(mean_hundredths(kind)) / 100.0; }
  nlohmann::json to_json() const;
};

class StatsAccumulator {
 public:
  void add(const WorkingGraph& wg);
  /// Throws std::invalid_argument when nothing was added.
  StatsReport report() const;

 private:
  std::size_t graphs_ = 0;
  std::array<std::size_t, kNumNodeKinds> totals_{};
  std::set<std::string> chunk_labels_;
  std::set<std::string> kg_labels_;
};

}  // namespace grapeqa
