#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "grapeqa/embedding.hpp"
#include "grapeqa/gnn.hpp"
#include "grapeqa/kg.hpp"
#include "grapeqa/pega.hpp"
#include "grapeqa/qa.hpp"
#include "grapeqa/relevance.hpp"
#include "grapeqa/tensor.hpp"
#include "grapeqa/working_graph.hpp"

namespace testing {

std::string source_path(const std::string& relative);

/// The committed 20-example fixture with a hash provider and seeded scorer.
struct FixtureEnv {
  grapeqa::KnowledgeGraph kg;
  std::unique_ptr<grapeqa::HashEmbeddingProvider> provider;
  std::unique_ptr<grapeqa::RelevanceScorer> scorer;
  std::shared_ptr<grapeqa::PosLexicon> lexicon;
  std::vector<grapeqa::QAExample> data;

  grapeqa::Pipeline pipeline(bool pega, bool canp) const;
};
FixtureEnv load_fixture(std::uint64_t seed = 0, std::size_t dim = 16, std::size_t d_rho = 8);

/// Random working graph: node 0 is the context node, the rest get random
/// kinds, random directed edges over every non-self-loop relation, random
/// features and relevance on KG-derived nodes.
grapeqa::WorkingGraph random_graph(grapeqa::Rng& rng, std::size_t nodes, std::size_t kg_relations,
                                   std::size_t d_in, std::size_t d_rho, double edge_prob);

/// Exact CANP result computed with GMP rationals; means rounded by MPFR.
struct CanpOracle {
  std::vector<std::size_t> assignment;
  std::map<std::size_t, double> means;
  std::size_t pruned = 0;
};
CanpOracle canp_oracle(const grapeqa::Tensor& psi);

/// Node delta |V'| and edge delta |V'|(|V'|-1) + 2|V'||V| between a graph
/// and its augmentation, plus structural checks on the new edges. Returns an
/// empty string when everything holds.
std::string check_counting_law(const grapeqa::WorkingGraph& before, const grapeqa::WorkingGraph& after);

}  // namespace testing
