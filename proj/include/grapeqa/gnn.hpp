#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "grapeqa/autodiff.hpp"
#include "grapeqa/working_graph.hpp"

namespace grapeqa {

struct GnnConfig {
  std::size_t d_in = 64;     // provider dimension
  std::size_t dim = 200;     // hidden size D
  std::size_t layers = 5;    // message-passing layers L
  std::size_t d_rho = 32;    // relevance head embedding size
  std::size_t num_relations = 7;  // RelationSpace::size()
  std::uint64_t seed = 0;
  friend bool operator==(const GnnConfig&, const GnnConfig&) = default;
};

enum ParamGroup : int { kGnnGroup = 0, kEncoderGroup = 1 };

/// Dense view of a working graph in ascending local-id order.
///
/// Edges include one self-loop per node and are sorted by (dst, src, rel), so
/// every per-target reduction runs in ascending source-id order.
struct GraphIndex {
  std::vector<LocalId> ids;
  std::map<LocalId, std::size_t> row_of;
  std::vector<NodeKind> kinds;
  std::vector<std::size_t> src, dst;
  std::vector<RelationId> rel;
  std::size_t context_row = 0;

  static GraphIndex build(const WorkingGraph& wg);
  std::size_t num_nodes() const { return ids.size(); }
  std::size_t num_edges() const { return src.size(); }
};

/// Relation- and node-type-aware attention message passing plus the answer
/// scoring head.
///
///   u_t   = node-type table[kind(t)]
///   r_st  = f_r([e_st; u_s; u_t])
///   m_st  = f_m([h_s; u_s; r_st])
///   q_s   = f_q([h_s; u_s; rho_s]),  k_t = f_k([h_t; u_t; rho_t; r_st])
///   alpha = softmax over edges into t of q_s . k_t / sqrt(D)
///   h_t  <- f_n(sum_s alpha_st m_st) + h_t
///
/// Every f_* is one affine map followed by GELU. rho_s projects the node's
/// relevance embedding and score; unscored nodes use a learned default.
class GnnModel {
 public:
  explicit GnnModel(const GnnConfig& config);
  GnnModel(const GnnModel& other);
  GnnModel& operator=(const GnnModel& other);
  GnnModel(GnnModel&&) noexcept = default;
  GnnModel& operator=(GnnModel&&) noexcept = default;

  const GnnConfig& config() const { return config_; }

  /// Parameters in declaration order (the checkpoint order).
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  ad::Parameter& param(const std::string& name);
  const ad::Parameter& param(const std::string& name) const;
  void zero_grad();

  struct TypeEmbeddings {
    ad::Var node;      // N x D
    ad::Var relation;  // E x D, aligned with GraphIndex edges
  };
  TypeEmbeddings embed_types(ad::Tape& tape, const GraphIndex& g);

  struct PassResult {
    GraphIndex graph;
    ad::Var h0;                              // input projection
    ad::Var h;                               // final node states
    std::vector<std::vector<double>> alpha;  // per layer, aligned with graph edges
  };
  /// Throws NumericError naming the layer and node on a non-finite state.
  PassResult message_pass(ad::Tape& tape, const WorkingGraph& wg);

  /// MLP([z; mean of non-context h; h_z]) as a 1 x 1 value.
  ad::Var score_option(ad::Tape& tape, const WorkingGraph& wg);

 private:
  void declare(std::string name, std::size_t rows, std::size_t cols, double stddev, Rng& rng);
  ad::Var P(ad::Tape& tape, const std::string& name) { return tape.param(param(name)); }

  GnnConfig config_;
  std::vector<std::unique_ptr<ad::Parameter>> params_;
  std::map<std::string, std::size_t> by_name_;
};

}  // namespace grapeqa
