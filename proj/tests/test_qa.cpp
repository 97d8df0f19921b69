#include "doctest.h"

#include <cmath>
#include <set>
#include <stdexcept>

#include "grapeqa/errors.hpp"
#include "grapeqa/qa.hpp"
#include "grapeqa/synthetic.hpp"

#include "support.hpp"

using namespace grapeqa;

TEST_CASE("dataset parsing and validation") {
  auto d = parse_dataset(
      R"({"id":"a","question":"q?","options":["x","y"],"answer_idx":1}

{"id":"b","question":"r?","options":["x","y","z"],"answer_idx":0}
)");
  REQUIRE(d.size() == 2);
  CHECK(d[0].gold == 1);
  CHECK(parse_dataset(dump_dataset(d)).size() == 2);
  CHECK(parse_dataset("").empty());
  CHECK_THROWS_WITH_AS(parse_dataset(R"({"id":"a","question":"q","options":["x"],"answer_idx":0})"),
                       doctest::Contains("line 1"), DataError);
  CHECK_THROWS_AS(parse_dataset(R"({"id":"a","question":"q","options":["x","y"],"answer_idx":2})"), DataError);
  CHECK_THROWS_AS(parse_dataset(R"({"id":"a","question":"q","options":["x","y"]})"), DataError);
  CHECK_THROWS_AS(parse_dataset(R"({"id":"a","question":"  ","options":["x","y"],"answer_idx":0})"), DataError);
  CHECK_THROWS_AS(parse_dataset("{nope"), DataError);
}

TEST_CASE("pipeline flag algebra") {
  auto env = testing::load_fixture();
  for (const auto& ex : env.data) {
    for (int o = 0; o < static_cast<int>(ex.options.size()); ++o) {
      auto base = build_option_graph(env.pipeline(false, false), ex, o);
      CHECK_FALSE(base.pega);
      CHECK_FALSE(base.canp);
      auto with_canp = build_option_graph(env.pipeline(false, true), ex, o);
      if (base.raw.count(NodeKind::AnswerEntity) <= 1) CHECK(with_canp.final_graph().same_structure(base.raw));
      auto both = build_option_graph(env.pipeline(true, true), ex, o);
      CHECK(both.raw.same_structure(base.raw));
      CHECK(both.pega->count(NodeKind::NounChunk) >= 1);
    }
  }
  PipelineConfig missing;
  missing.pega = true;
  Pipeline p{env.kg, *env.provider, *env.scorer, missing};
  CHECK_THROWS_AS(build_option_graph(p, env.data[0], 0), std::invalid_argument);
}

TEST_CASE("loss needs at least two options") {
  ad::Tape tape;
  CHECK_THROWS_AS(option_loss(tape.constant(Tensor(1, 1)), 0), std::invalid_argument);
  CHECK(option_loss(tape.constant(Tensor(1, 4)), 3).value().data[0] == doctest::Approx(std::log(4.0)));
}

TEST_CASE("training is deterministic under a fixed seed") {
  auto env = testing::load_fixture(0, 8, 4);
  const auto data = prepare(env.pipeline(true, false), env.data);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 7;
  tc.dim = 8;
  tc.layers = 1;
  tc.d_rho = 4;
  tc.seed = 21;
  auto a = train(data, &data, env.kg.relation_space(), 8, tc);
  auto b = train(data, &data, env.kg.relation_space(), 8, tc);
  REQUIRE(a.metrics.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(metrics_line(a.metrics[e]) == metrics_line(b.metrics[e]));
    CHECK(a.metrics[e].train_loss == b.metrics[e].train_loss);
  }
  for (auto* p : a.model.parameters()) CHECK(p->value == b.model.param(p->name).value);
  CHECK(evaluate(a.model, data).accuracy == *a.metrics.back().dev_acc);

  tc.seed = 22;
  auto c = train(data, nullptr, env.kg.relation_space(), 8, tc);
  CHECK(c.metrics[0].train_loss != a.metrics[0].train_loss);
  CHECK_FALSE(c.metrics[0].dev_acc);

  PreparedSet empty;
  CHECK_THROWS_AS(train(empty, nullptr, env.kg.relation_space(), 8, tc), std::invalid_argument);
}

TEST_CASE("metrics line schema") {
  EpochMetrics m{3, 0.5, 0.25, std::nullopt};
  CHECK(metrics_line(m) == R"({"dev_acc":null,"epoch":3,"train_acc":0.25,"train_loss":0.5})");
  m.dev_acc = 1.0;
  CHECK(metrics_line(m) == R"({"dev_acc":1.0,"epoch":3,"train_acc":0.25,"train_loss":0.5})");
}

TEST_CASE("planted path task obeys its rule") {
  SyntheticOptions so;
  so.train = 30;
  so.test = 10;
  so.seed = 4;
  auto task = planted_path_task(so);
  CHECK(task.train.size() == 30);
  CHECK(task.test.size() == 10);
  CHECK(dump_dataset(planted_path_task(so).train) == dump_dataset(task.train));
  auto kg = parse_kg(task.kg_jsonl);
  HashEmbeddingProvider p(8, 0);
  auto scorer = RelevanceScorer::random(p, 4, 0);
  Pipeline pipe{kg, p, scorer, {}};
  for (const auto& ex : task.train) {
    validate(ex);
    for (int o = 0; o < 4; ++o) {
      auto wg = build_option_graph(pipe, ex, o).raw;
      CHECK(wg.count(NodeKind::QuestionEntity) == 2);
      CHECK(wg.count(NodeKind::AnswerEntity) == 1);
      // extras touching each question entity
      std::set<LocalId> touched;
      for (const auto& e : wg.edges) {
        const auto* s = wg.find(e.src);
        const auto* t = wg.find(e.dst);
        if (s->kind == NodeKind::ExtraNode && t->kind == NodeKind::QuestionEntity) touched.insert(t->id);
      }
      CHECK((touched.size() == 2) == (o == ex.gold));
    }
  }
}

TEST_CASE("planted chunk task hides everything from the KG") {
  SyntheticOptions so;
  so.train = 20;
  so.test = 5;
  so.seed = 9;
  auto task = planted_chunk_task(so);
  auto kg = parse_kg(task.kg_jsonl);
  auto lex = std::make_shared<PosLexicon>(PosLexicon::parse(task.lexicon_jsonl));
  HashEmbeddingProvider p(8, 0);
  auto scorer = RelevanceScorer::random(p, 4, 0);
  PipelineConfig pc;
  pc.pega = true;
  pc.chunker = RuleBasedChunker{lex};
  Pipeline pipe{kg, p, scorer, pc};
  std::set<std::string> contexts;
  for (const auto& ex : task.train) {
    for (int o = 0; o < 4; ++o) {
      auto staged = build_option_graph(pipe, ex, o);
      CHECK(staged.raw.nodes.size() == 1);
      CHECK(staged.pega->count(NodeKind::NounChunk) == 2);
      CHECK(contexts.insert(staged.raw.nodes[0].label).second);
    }
  }
}
