#include "grapeqa/relevance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "grapeqa/errors.hpp"

namespace grapeqa {

bool is_kg_derived(NodeKind kind) {
  return kind == NodeKind::QuestionEntity || kind == NodeKind::AnswerEntity || kind == NodeKind::ExtraNode;
}

RelevanceScorer::RelevanceScorer(const EmbeddingProvider& encoder, Tensor head, Tensor score_weights,
                                 double score_bias)
    : encoder_(&encoder), head_(std::move(head)), score_weights_(std::move(score_weights)),
      score_bias_(score_bias) {
  if (head_.cols != encoder.dim()) {
    throw std::invalid_argument("relevance head expects input dim " + std::to_string(head_.cols) +
                                " but encoder produces " + std::to_string(encoder.dim()));
  }
  if (score_weights_.rows != 1 || score_weights_.cols != head_.rows) {
    throw std::invalid_argument("relevance score weights must be 1 x " + std::to_string(head_.rows));
  }
}

RelevanceScorer RelevanceScorer::random(const EmbeddingProvider& encoder, std::size_t d_rho,
                                        std::uint64_t seed) {
  Rng rng(seed);
  Tensor head(d_rho, encoder.dim());
  const double hs = 1.0 / std::sqrt(static_cast<double>(encoder.dim()));
  for (auto& x : head.data) x = rng.normal() * hs;
  Tensor w(1, d_rho);
  const double ws = 1.0 / std::sqrt(static_cast<double>(d_rho));
  for (auto& x : w.data) x = rng.normal() * ws;
  round_to_float(head);
  round_to_float(w);
  return RelevanceScorer(encoder, std::move(head), std::move(w), 0.0);
}

RelevanceScorer::Result RelevanceScorer::score_text(std::string_view text) const {
  const Vec v = encoder_->embed(text);
  Result r;
  r.embedding.assign(head_.rows, 0.0);
  for (std::size_t i = 0; i < head_.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < head_.cols; ++j) acc += head_(i, j) * v[j];
    r.embedding[i] = acc;
  }
  double logit = score_bias_;
  for (std::size_t i = 0; i < head_.rows; ++i) logit += score_weights_(0, i) * r.embedding[i];
  r.score = 1.0 / (1.0 + std::exp(-logit));
  return r;
}

RelevanceScorer::Result score_node(const RelevanceScorer& scorer, std::string_view context_text,
                                   std::string_view node_label) {
  std::string text(context_text);
  text.push_back(' ');
  text += node_label;
  return scorer.score_text(text);
}

WorkingGraph score_working_graph(const RelevanceScorer& scorer, WorkingGraph wg) {
  const WgNode* z = wg.context_node();
  if (z == nullptr) throw std::logic_error("relevance scoring requires a context node");
  const std::string ctx = z->label;
  for (const auto& n : wg.nodes) {
    if (!is_kg_derived(n.kind)) continue;
    auto r = score_node(scorer, ctx, n.label);
    wg.relevance[n.id] = r.score;
    wg.relevance_embedding[n.id] = std::move(r.embedding);
  }
  return wg;
}

WorkingGraph threshold_prune(WorkingGraph wg, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("relevance threshold must lie in [0, 1]");
  }
  std::vector<LocalId> drop;
  for (const auto& n : wg.nodes) {
    if (!is_kg_derived(n.kind)) continue;
    auto it = wg.relevance.find(n.id);
    if (it == wg.relevance.end()) {
      throw std::logic_error("node " + std::to_string(n.id) + " has no relevance score");
    }
    if (it->second < threshold) drop.push_back(n.id);
  }
  wg.remove_nodes(drop);
  return wg;
}

}  // namespace grapeqa
