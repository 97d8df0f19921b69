#include "grapeqa/stats.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

#include "grapeqa/relevance.hpp"
#include "grapeqa/text.hpp"

namespace grapeqa {

using nlohmann::json;

namespace {

constexpr std::array<NodeKind, 4> kReported = {NodeKind::QuestionEntity, NodeKind::AnswerEntity,
                                               NodeKind::ExtraNode, NodeKind::NounChunk};

}  // namespace

long StatsReport::mean_hundredths(NodeKind kind) const {
  if (graphs == 0) throw std::invalid_argument("no graphs");
  const auto total = static_cast<unsigned long long>(totals[static_cast<std::size_t>(kind)]);
  const auto g = static_cast<unsigned long long>(graphs);
  return static_cast<long>((200 * total + g) / (2 * g));
}

json StatsReport::to_json() const {
  json means = json::object();
  json counts = json::object();
  for (NodeKind k : kReported) {
    const std::string name(grapeqa::to_string(k));
    means[name] = mean(k);
    counts[name] = totals[static_cast<std::size_t>(k)];
  }
  return {{"graphs", graphs},
          {"mean_nodes", std::move(means)},
          {"total_nodes", std::move(counts)},
          {"unique_nodes",
           {{"noun_chunk", unique_chunk_labels}, {"kg", unique_kg_labels}, {"overlap", overlap}}}};
}

void StatsAccumulator::add(const WorkingGraph& wg) {
  ++graphs_;
  for (const auto& n : wg.nodes) {
    ++totals_[static_cast<std::size_t>(n.kind)];
    if (n.kind == NodeKind::NounChunk) {
      chunk_labels_.insert(normalize(n.label));
    } else if (is_kg_derived(n.kind)) {
      kg_labels_.insert(normalize(n.label));
    }
  }
}

StatsReport StatsAccumulator::report() const {
  if (graphs_ == 0) throw std::invalid_argument("statistics over an empty set of working graphs");
  StatsReport r;
  r.graphs = graphs_;
  r.totals = totals_;
  r.unique_chunk_labels = chunk_labels_.size();
  r.unique_kg_labels = kg_labels_.size();
  std::vector<std::string> common;
  std::set_intersection(chunk_labels_.begin(), chunk_labels_.end(), kg_labels_.begin(), kg_labels_.end(),
                        std::back_inserter(common));
  r.overlap = common.size();
  return r;
}

}  // namespace grapeqa
