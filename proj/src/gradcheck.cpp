#include "grapeqa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "grapeqa/qa.hpp"

namespace grapeqa {

GradcheckResult gradient_check(const GradcheckOptions& opt) {
  const auto kg = parse_kg(
      R"({"subj":"alpha","rel":"RelatedTo","obj":"bridge"}
{"subj":"bridge","rel":"IsA","obj":"gamma"}
{"subj":"beta","rel":"AtLocation","obj":"bridge"}
)");
  auto lexicon = std::make_shared<PosLexicon>();
  lexicon->add("the", Pos::Det);
  lexicon->add("river", Pos::Noun);

  HashEmbeddingProvider provider(opt.dim, opt.seed + 1);
  const std::size_t d_rho = 4;
  auto scorer = RelevanceScorer::random(provider, d_rho, opt.seed + 2);
  PipelineConfig pc;
  pc.pega = true;
  pc.chunker = RuleBasedChunker{lexicon};
  Pipeline pipeline{kg, provider, scorer, pc};
  QAExample ex{"gradcheck", "alpha meets beta near the river", {"gamma", "delta"}, 0};
  const auto graphs = build_example_graphs(pipeline, ex);

  GnnConfig gc;
  gc.d_in = provider.dim();
  gc.dim = opt.dim;
  gc.layers = opt.layers;
  gc.d_rho = d_rho;
  gc.num_relations = kg.relation_space().size();
  gc.seed = opt.seed;
  GnnModel model(gc);

  auto loss_value = [&] {
    ad::Tape tape;
    return option_loss(score_options(tape, model, graphs), 0).value().data[0];
  };

  model.zero_grad();
  {
    ad::Tape tape;
    tape.backward(option_loss(score_options(tape, model, graphs), 0));
  }

  GradcheckResult r;
  r.graph_nodes = graphs[0].nodes.size();
  for (auto* p : model.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data[i];
      const double saved = x;
      x = saved + opt.step;
      const double up = loss_value();
      x = saved - opt.step;
      const double down = loss_value();
      x = saved;
      const double numeric = (up - down) / (2 * opt.step);
      const double analytic = p->grad.data[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      ++r.checked;
      if (rel > r.max_rel_error || r.worst.empty()) {
        r.max_rel_error = std::max(r.max_rel_error, rel);
        if (rel >= r.max_rel_error) r.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

}  // namespace grapeqa
