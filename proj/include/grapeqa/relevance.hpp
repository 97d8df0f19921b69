#pragma once

#include <cstdint>
#include <string_view>

#include "grapeqa/embedding.hpp"
#include "grapeqa/tensor.hpp"
#include "grapeqa/working_graph.hpp"

namespace grapeqa {

/// Encoder + linear head + sigmoid scorer, used for node relevance and CANP.
///
/// embedding = head * encoder(text) (head is d_rho x d_in);
/// score = sigmoid(score_weights . embedding + score_bias).
/// The encoder is borrowed and must outlive the scorer.
class RelevanceScorer {
 public:
  struct Result {
    Vec embedding;
    double score = 0.0;
  };

  RelevanceScorer(const EmbeddingProvider& encoder, Tensor head, Tensor score_weights, double score_bias);

  /// Seeded Gaussian initialization, rounded to float32.
  static RelevanceScorer random(const EmbeddingProvider& encoder, std::size_t d_rho, std::uint64_t seed);

  Result score_text(std::string_view text) const;

  std::size_t d_in() const { return head_.cols; }
  std::size_t d_rho() const { return head_.rows; }
  const Tensor& head() const { return head_; }
  const Tensor& score_weights() const { return score_weights_; }
  double score_bias() const { return score_bias_; }
  const EmbeddingProvider& encoder() const { return *encoder_; }

 private:
  const EmbeddingProvider* encoder_;
  Tensor head_;
  Tensor score_weights_;  // 1 x d_rho
  double score_bias_;
};

/// Relevance of `node_label` given the QA context text.
RelevanceScorer::Result score_node(const RelevanceScorer& scorer, std::string_view context_text,
                                   std::string_view node_label);

/// Fills relevance and relevance_embedding for every KG-derived node.
WorkingGraph score_working_graph(const RelevanceScorer& scorer, WorkingGraph wg);

/// Drops KG-derived nodes whose score is below `threshold` (in [0, 1]).
WorkingGraph threshold_prune(WorkingGraph wg, double threshold);

bool is_kg_derived(NodeKind kind);

}  // namespace grapeqa
