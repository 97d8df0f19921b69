#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "grapeqa/relevance.hpp"
#include "grapeqa/tensor.hpp"
#include "grapeqa/working_graph.hpp"

namespace grapeqa {

/// Relevance of every extra node against every answer entity.
/// Row i belongs to extras[i], column j to answers[j]; both ascend by id.
struct PsiMatrix {
  std::vector<LocalId> extras;
  std::vector<LocalId> answers;
  Tensor values;
};

/// Cluster structure over psi columns.
///
/// Means are computed exactly (the psi entries are summed as rationals) and
/// then rounded once to the nearest double; the argmin compares the exact
/// values. Ties in both argmax and argmin go to the lowest column.
struct ClusterAssignment {
  std::vector<std::size_t> assignment;        // row -> column
  std::map<std::size_t, double> cluster_means;  // non-empty clusters only
  std::size_t pruned_cluster = 0;
};

/// psi[s][a] = score(text(z) + " " + label(a) + " " + label(s)).
/// Requires at least one extra node and at least two answer entities.
PsiMatrix score_extra_nodes(const RelevanceScorer& scorer, const WorkingGraph& wg);

/// Throws std::invalid_argument on an empty matrix.
ClusterAssignment assign_clusters(const Tensor& psi);

struct CanpOptions {
  /// Skip pruning when fewer extra nodes than this would survive.
  std::size_t min_survivors = 0;
};

struct CanpOutcome {
  bool applied = false;
  std::optional<PsiMatrix> psi;
  std::optional<ClusterAssignment> clusters;
  std::vector<LocalId> removed;
};

/// Decides which extra nodes CANP removes without touching the graph.
CanpOutcome plan_canp(const WorkingGraph& wg, const RelevanceScorer& scorer, const CanpOptions& options = {});

/// Removes the extra-node cluster with the lowest mean relevance and all of
/// its incident edges. Graphs with at most one answer entity or no extra
/// nodes are returned unchanged.
WorkingGraph canp_prune(WorkingGraph wg, const RelevanceScorer& scorer, const CanpOptions& options = {},
                        CanpOutcome* outcome = nullptr);

}  // namespace grapeqa
