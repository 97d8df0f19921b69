#include "support.hpp"

#include <algorithm>
#include <set>

#include <gmpxx.h>
#include <mpfr.h>

namespace testing {

using namespace grapeqa;

std::string source_path(const std::string& relative) { return std::string(GRAPEQA_SOURCE_DIR) + "/" + relative; }

Pipeline FixtureEnv::pipeline(bool pega, bool canp) const {
  PipelineConfig c;
  c.pega = pega;
  c.canp = canp;
  c.chunker = RuleBasedChunker{lexicon};
  return Pipeline{kg, *provider, *scorer, c};
}

FixtureEnv load_fixture(std::uint64_t seed, std::size_t dim, std::size_t d_rho) {
  FixtureEnv env;
  env.kg = load_kg(source_path("data/fixture/kg.jsonl"));
  env.provider = std::make_unique<HashEmbeddingProvider>(dim, seed);
  env.scorer = std::make_unique<RelevanceScorer>(RelevanceScorer::random(*env.provider, d_rho, seed));
  env.lexicon = std::make_shared<PosLexicon>(PosLexicon::load(source_path("data/fixture/lexicon.jsonl")));
  env.data = load_dataset(source_path("data/fixture/dataset.jsonl"));
  return env;
}

WorkingGraph random_graph(Rng& rng, std::size_t nodes, std::size_t kg_relations, std::size_t d_in,
                          std::size_t d_rho, double edge_prob) {
  WorkingGraph wg;
  wg.relations = RelationSpace{kg_relations};
  const auto self = wg.relations.self_loop();
  for (std::size_t i = 0; i < nodes; ++i) {
    const auto kind = i == 0 ? NodeKind::Context : static_cast<NodeKind>(1 + rng.below(kNumNodeKinds - 1));
    wg.nodes.push_back({static_cast<LocalId>(i), kind, "n" + std::to_string(i), std::nullopt});
    Vec f(d_in);
    for (auto& x : f) x = rng.normal() / std::sqrt(static_cast<double>(d_in));
    wg.features[static_cast<LocalId>(i)] = f;
    if (is_kg_derived(kind)) {
      Vec e(d_rho);
      for (auto& x : e) x = rng.normal();
      wg.relevance_embedding[static_cast<LocalId>(i)] = e;
      wg.relevance[static_cast<LocalId>(i)] = rng.uniform();
    }
  }
  for (std::size_t s = 0; s < nodes; ++s) {
    for (std::size_t t = 0; t < nodes; ++t) {
      if (s == t || rng.uniform() >= edge_prob) continue;
      auto rel = static_cast<RelationId>(rng.below(static_cast<std::size_t>(self)));
      wg.edges.push_back({static_cast<LocalId>(s), rel, static_cast<LocalId>(t)});
    }
  }
  std::sort(wg.edges.begin(), wg.edges.end());
  return wg;
}

CanpOracle canp_oracle(const Tensor& psi) {
  CanpOracle o;
  std::vector<std::vector<mpq_class>> q(psi.rows, std::vector<mpq_class>(psi.cols));
  for (std::size_t r = 0; r < psi.rows; ++r) {
    for (std::size_t c = 0; c < psi.cols; ++c) q[r][c] = mpq_class(psi(r, c));  // exact for doubles
  }
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < psi.rows; ++r) {
    // first column that is >= every column
    std::size_t best = psi.cols;
    for (std::size_t c = 0; c < psi.cols && best == psi.cols; ++c) {
      bool is_max = true;
      for (std::size_t d = 0; d < psi.cols; ++d) is_max = is_max && q[r][c] >= q[r][d];
      if (is_max) best = c;
    }
    o.assignment.push_back(best);
    members[best].push_back(r);
  }
  std::map<std::size_t, mpq_class> exact;
  for (const auto& [c, rows] : members) {
    mpq_class sum = 0;
    for (auto r : rows) sum += q[r][c];
    mpq_class mean = sum / mpq_class(static_cast<unsigned long>(rows.size()));
    mean.canonicalize();
    exact[c] = mean;
    mpfr_t x;
    mpfr_init2(x, 53);
    mpfr_set_q(x, mean.get_mpq_t(), MPFR_RNDN);
    o.means[c] = mpfr_get_d(x, MPFR_RNDN);
    mpfr_clear(x);
  }
  bool first = true;
  for (const auto& [c, m] : exact) {
    if (first || m < exact[o.pruned]) o.pruned = c;
    first = false;
  }
  return o;
}

std::string check_counting_law(const WorkingGraph& before, const WorkingGraph& after) {
  const std::size_t v = before.nodes.size();
  const std::size_t vn = after.nodes.size() - v;
  if (after.count(NodeKind::NounChunk) != vn) return "node delta is not the chunk count";
  const std::size_t expected = vn * (vn - (vn > 0 ? 1 : 0)) + 2 * vn * v;
  const std::size_t got = after.edges.size() - before.edges.size();
  if (got != expected) {
    return "edge delta " + std::to_string(got) + " != " + std::to_string(expected) + " (|V'|=" +
           std::to_string(vn) + ", |V|=" + std::to_string(v) + ")";
  }
  std::set<LocalId> old_ids;
  for (const auto& n : before.nodes) old_ids.insert(n.id);
  const auto& rs = after.relations;
  std::set<std::tuple<LocalId, RelationId, LocalId>> edges;
  for (const auto& e : after.edges) edges.emplace(e.src, e.rel, e.dst);
  for (const auto& e : before.edges) {
    if (!edges.count({e.src, e.rel, e.dst})) return "an original edge disappeared";
  }
  for (const auto& e : after.edges) {
    const bool s_old = old_ids.count(e.src) != 0;
    const bool d_old = old_ids.count(e.dst) != 0;
    if (s_old && d_old) continue;
    if (!s_old && !d_old) {
      if (e.rel != rs.chunk_chunk() && e.rel != rs.chunk_chunk_inverse()) return "chunk-chunk edge has wrong relation";
      if (!edges.count({e.dst, RelationSpace::inverse(e.rel), e.src})) return "chunk-chunk edge lacks its inverse";
    } else {
      const bool fwd = !s_old && e.rel == rs.chunk_other();
      const bool inv = s_old && e.rel == rs.chunk_other_inverse();
      if (!fwd && !inv) return "chunk-other edge has wrong relation or direction";
      if (!edges.count({e.dst, RelationSpace::inverse(e.rel), e.src})) return "chunk-other edge lacks its inverse";
    }
  }
  return {};
}

}  // namespace testing
