#include "grapeqa/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "grapeqa/errors.hpp"

namespace grapeqa {

using namespace ad;

GraphIndex GraphIndex::build(const WorkingGraph& wg) {
  GraphIndex g;
  bool have_context = false;
  for (const auto& n : wg.nodes) {
    g.row_of.emplace(n.id, g.ids.size());
    if (n.kind == NodeKind::Context) {
      g.context_row = g.ids.size();
      have_context = true;
    }
    g.ids.push_back(n.id);
    g.kinds.push_back(n.kind);
  }
  if (g.ids.empty()) throw std::invalid_argument("message passing on an empty working graph");
  if (!have_context) throw std::invalid_argument("working graph has no context node");

  std::vector<std::tuple<std::size_t, std::size_t, RelationId>> edges;
  edges.reserve(wg.edges.size() + g.ids.size());
  for (const auto& e : wg.edges) {
    auto s = g.row_of.find(e.src);
    auto t = g.row_of.find(e.dst);
    if (s == g.row_of.end() || t == g.row_of.end()) {
      throw std::invalid_argument("edge references a missing node");
    }
    edges.emplace_back(t->second, s->second, e.rel);
  }
  const RelationId self = wg.relations.self_loop();
  for (std::size_t i = 0; i < g.ids.size(); ++i) edges.emplace_back(i, i, self);
  std::sort(edges.begin(), edges.end());
  for (const auto& [t, s, r] : edges) {
    g.dst.push_back(t);
    g.src.push_back(s);
    g.rel.push_back(r);
  }
  return g;
}

void GnnModel::declare(std::string name, std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& x : t.data) x = stddev * rng.normal();
  round_to_float(t);
  by_name_.emplace(name, params_.size());
  params_.push_back(std::make_unique<ad::Parameter>(std::move(name), std::move(t), kGnnGroup));
}

GnnModel::GnnModel(const GnnConfig& config) : config_(config) {
  if (config.dim == 0 || config.d_in == 0 || config.d_rho == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  Rng rng(config.seed);
  const std::size_t D = config.dim;
  auto fan = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  declare("input.W", config.d_in, D, 1.0, rng);  // features are ~N(0, 1/d_in) per entry
  declare("input.b", 1, D, 0.0, rng);
  declare("node_type", kNumNodeKinds, D, 1.0, rng);
  declare("relation", config.num_relations, D, 1.0, rng);
  declare("f_r.W", 3 * D, D, fan(3 * D), rng);
  declare("f_r.b", 1, D, 0.0, rng);
  declare("rho.W", config.d_rho + 1, D, fan(config.d_rho + 1), rng);
  declare("rho.b", 1, D, 0.0, rng);
  declare("rho.default", 1, D, 1.0, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    declare(p + "f_m.W", 3 * D, D, fan(3 * D), rng);
    declare(p + "f_m.b", 1, D, 0.0, rng);
    declare(p + "f_q.W", 3 * D, D, fan(3 * D), rng);
    declare(p + "f_q.b", 1, D, 0.0, rng);
    declare(p + "f_k.W", 4 * D, D, fan(4 * D), rng);
    declare(p + "f_k.b", 1, D, 0.0, rng);
    declare(p + "f_n.W", D, D, fan(D), rng);
    declare(p + "f_n.b", 1, D, 0.0, rng);
  }
  const std::size_t head_in = config.d_in + 2 * D;
  declare("head.W1", head_in, D, fan(head_in), rng);
  declare("head.b1", 1, D, 0.0, rng);
  declare("head.W2", D, 1, fan(D), rng);
  declare("head.b2", 1, 1, 0.0, rng);
}

GnnModel::GnnModel(const GnnModel& other) : config_(other.config_), by_name_(other.by_name_) {
  for (const auto& p : other.params_) params_.push_back(std::make_unique<ad::Parameter>(*p));
}

GnnModel& GnnModel::operator=(const GnnModel& other) {
  if (this != &other) *this = GnnModel(other);
  return *this;
}

std::vector<ad::Parameter*> GnnModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const ad::Parameter*> GnnModel::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

ad::Parameter& GnnModel::param(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
  return *params_[it->second];
}

const ad::Parameter& GnnModel::param(const std::string& name) const {
  return const_cast<GnnModel*>(this)->param(name);
}

void GnnModel::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

GnnModel::TypeEmbeddings GnnModel::embed_types(Tape& tape, const GraphIndex& g) {
  std::vector<std::size_t> kinds;
  for (auto k : g.kinds) kinds.push_back(static_cast<std::size_t>(k));
  std::vector<std::size_t> rels;
  for (auto r : g.rel) {
    if (r < 0 || static_cast<std::size_t>(r) >= config_.num_relations) {
      throw std::invalid_argument("relation id " + std::to_string(r) + " unknown to the model (has " +
                                  std::to_string(config_.num_relations) + ")");
    }
    rels.push_back(static_cast<std::size_t>(r));
  }
  Var u = gather_rows(P(tape, "node_type"), kinds);
  Var e = gather_rows(P(tape, "relation"), rels);
  Var us = gather_rows(u, g.src);
  Var ut = gather_rows(u, g.dst);
  Var r = gelu(linear(concat_cols({e, us, ut}), P(tape, "f_r.W"), P(tape, "f_r.b")));
  return {u, r};
}

GnnModel::PassResult GnnModel::message_pass(Tape& tape, const WorkingGraph& wg) {
  PassResult out;
  out.graph = GraphIndex::build(wg);
  const GraphIndex& g = out.graph;
  const std::size_t N = g.num_nodes();
  const std::size_t D = config_.dim;

  Tensor x(N, config_.d_in);
  for (std::size_t i = 0; i < N; ++i) {
    auto it = wg.features.find(g.ids[i]);
    if (it == wg.features.end()) {
      throw std::invalid_argument("node " + std::to_string(g.ids[i]) + " has no feature vector");
    }
    if (it->second.size() != config_.d_in) {
      throw std::invalid_argument("node " + std::to_string(g.ids[i]) + " feature has dim " +
                                  std::to_string(it->second.size()) + ", model expects " +
                                  std::to_string(config_.d_in));
    }
    std::copy(it->second.begin(), it->second.end(), x.row_span(i).begin());
  }
  out.h0 = linear(tape.constant(std::move(x)), P(tape, "input.W"), P(tape, "input.b"));

  const auto types = embed_types(tape, g);

  // Relevance embeddings: scored rows first, then the shared default row.
  std::vector<std::size_t> rho_rows(N);
  std::vector<Tensor> scored;
  for (std::size_t i = 0; i < N; ++i) {
    auto emb = wg.relevance_embedding.find(g.ids[i]);
    auto sc = wg.relevance.find(g.ids[i]);
    if (emb == wg.relevance_embedding.end() || sc == wg.relevance.end()) continue;
    if (emb->second.size() != config_.d_rho) {
      throw std::invalid_argument("relevance embedding of node " + std::to_string(g.ids[i]) +
                                  " has dim " + std::to_string(emb->second.size()));
    }
    Tensor row(1, config_.d_rho + 1);
    std::copy(emb->second.begin(), emb->second.end(), row.data.begin());
    row.data.back() = sc->second;
    rho_rows[i] = scored.size();
    scored.push_back(std::move(row));
  }
  Var rho_default = P(tape, "rho.default");
  Var rho;
  if (scored.empty()) {
    rho = gather_rows(rho_default, std::vector<std::size_t>(N, 0));
  } else {
    Tensor rin(scored.size(), config_.d_rho + 1);
    for (std::size_t k = 0; k < scored.size(); ++k) {
      std::copy(scored[k].data.begin(), scored[k].data.end(), rin.row_span(k).begin());
    }
    Var proj = gelu(linear(tape.constant(std::move(rin)), P(tape, "rho.W"), P(tape, "rho.b")));
    std::vector<std::size_t> pick(N);
    for (std::size_t i = 0; i < N; ++i) {
      const bool has = wg.relevance_embedding.count(g.ids[i]) != 0 && wg.relevance.count(g.ids[i]) != 0;
      pick[i] = has ? rho_rows[i] : scored.size();
    }
    rho = gather_rows(concat_rows({proj, rho_default}), pick);
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(D));
  Var u_src = gather_rows(types.node, g.src);
  Var u_dst = gather_rows(types.node, g.dst);
  Var rho_dst = gather_rows(rho, g.dst);
  Var h = out.h0;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Var h_src = gather_rows(h, g.src);
    Var h_dst = gather_rows(h, g.dst);
    Var msg = gelu(linear(concat_cols({h_src, u_src, types.relation}), P(tape, p + "f_m.W"), P(tape, p + "f_m.b")));
    Var query = gelu(linear(concat_cols({h, types.node, rho}), P(tape, p + "f_q.W"), P(tape, p + "f_q.b")));
    Var key = gelu(linear(concat_cols({h_dst, u_dst, rho_dst, types.relation}), P(tape, p + "f_k.W"),
                          P(tape, p + "f_k.b")));
    Var logits = scale(row_dot(gather_rows(query, g.src), key), inv_sqrt_d);
    Var alpha = segment_softmax(logits, g.dst, N);
    out.alpha.push_back(alpha.value().data);
    Var agg = segment_sum(mul_rows(msg, alpha), g.dst, N);
    h = add(gelu(linear(agg, P(tape, p + "f_n.W"), P(tape, p + "f_n.b"))), h);

    const Tensor& hv = h.value();
    for (std::size_t i = 0; i < N; ++i) {
      for (double v : hv.row_span(i)) {
        if (!std::isfinite(v)) {
          throw NumericError("non-finite activation at layer " + std::to_string(l) + ", node " +
                             std::to_string(g.ids[i]));
        }
      }
    }
  }
  out.h = h;
  return out;
}

Var GnnModel::score_option(Tape& tape, const WorkingGraph& wg) {
  auto pass = message_pass(tape, wg);
  const auto& g = pass.graph;
  const auto& z = wg.features.at(g.ids[g.context_row]);

  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (i != g.context_row) others.push_back(i);
  }
  Var pooled = others.empty() ? tape.constant(Tensor(1, config_.dim)) : mean_rows(pass.h, others);
  Var hz = gather_rows(pass.h, {g.context_row});
  Var in = concat_cols({tape.constant(Tensor::row(z)), pooled, hz});
  Var hidden = gelu(linear(in, P(tape, "head.W1"), P(tape, "head.b1")));
  return linear(hidden, P(tape, "head.W2"), P(tape, "head.b2"));
}

}  // namespace grapeqa
