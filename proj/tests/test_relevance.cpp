#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "grapeqa/kg.hpp"
#include "grapeqa/relevance.hpp"

using namespace grapeqa;

namespace {

// provider returning a fixed vector per known text
class TableProvider final : public EmbeddingProvider {
 public:
  std::size_t dim() const override { return 2; }
  Vec embed(std::string_view text) const override {
    if (text == "ctx q1") return {1.0, 0.0};
    if (text == "ctx a1") return {0.0, 1.0};
    return {0.5, 0.5};
  }
  std::vector<std::string> subtokens(std::string_view text) const override { return {std::string(text)}; }
};

WorkingGraph two_entity_graph() {
  WorkingGraph wg;
  wg.relations = RelationSpace{1};
  wg.nodes = {{0, NodeKind::QuestionEntity, "q1", 0},
              {1, NodeKind::AnswerEntity, "a1", 1},
              {2, NodeKind::Context, "ctx", std::nullopt}};
  wg.edges = {{0, 0, 1}, {1, 1, 0}, {2, 2, 0}, {0, 3, 2}, {2, 2, 1}, {1, 3, 2}};
  return wg;
}

}  // namespace

TEST_CASE("scorer is a linear head followed by a sigmoid") {
  TableProvider p;
  Tensor head(2, 2);
  head.data = {2.0, 0.0, 0.0, -1.0};
  Tensor w(1, 2);
  w.data = {1.0, 1.0};
  RelevanceScorer s(p, head, w, 0.5);
  auto r = score_node(s, "ctx", "q1");
  CHECK(r.embedding == Vec{2.0, 0.0});
  CHECK(r.score == doctest::Approx(1.0 / (1.0 + std::exp(-2.5))).epsilon(1e-15));
  auto r2 = s.score_text("ctx a1");
  CHECK(r2.score == doctest::Approx(1.0 / (1.0 + std::exp(0.5))).epsilon(1e-15));
  CHECK_THROWS_AS(RelevanceScorer(p, Tensor(2, 3), w, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RelevanceScorer(p, head, Tensor(1, 3), 0.0), std::invalid_argument);
}

TEST_CASE("working graph scores cover KG-derived nodes only, and thresholding drops low ones") {
  TableProvider p;
  Tensor head(2, 2);
  head.data = {2.0, 0.0, 0.0, -1.0};
  Tensor w(1, 2);
  w.data = {1.0, 1.0};
  RelevanceScorer s(p, head, w, 0.0);
  auto wg = score_working_graph(s, two_entity_graph());
  CHECK(wg.relevance.size() == 2);
  CHECK(wg.relevance.count(2) == 0);
  CHECK(wg.relevance.at(0) > 0.5);
  CHECK(wg.relevance.at(1) < 0.5);

  auto kept = threshold_prune(wg, 0.5);
  CHECK(kept.nodes.size() == 2);
  CHECK(kept.find(1) == nullptr);
  for (const auto& e : kept.edges) CHECK((e.src != 1 && e.dst != 1));
  CHECK(threshold_prune(wg, 0.0).same_structure(wg));
  CHECK(threshold_prune(wg, 1.0).nodes.size() == 1);  // the context node is never pruned
  CHECK_THROWS_AS(threshold_prune(wg, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(threshold_prune(two_entity_graph(), 0.5), std::logic_error);
}

TEST_CASE("random scorer is seeded and float32-exact") {
  HashEmbeddingProvider p(8, 0);
  auto a = RelevanceScorer::random(p, 4, 9);
  auto b = RelevanceScorer::random(p, 4, 9);
  CHECK(a.head() == b.head());
  CHECK(a.score_weights() == b.score_weights());
  for (double x : a.head().data) CHECK(static_cast<double>(static_cast<float>(x)) == x);
  CHECK(RelevanceScorer::random(p, 4, 10).head() != a.head());
}
