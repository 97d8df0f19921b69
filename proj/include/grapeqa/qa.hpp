#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grapeqa/canp.hpp"
#include "grapeqa/embedding.hpp"
#include "grapeqa/gnn.hpp"
#include "grapeqa/kg.hpp"
#include "grapeqa/pega.hpp"
#include "grapeqa/relevance.hpp"
#include "grapeqa/working_graph.hpp"

namespace grapeqa {

struct QAExample {
  std::string id;
  std::string question;
  std::vector<std::string> options;
  int gold = 0;
};

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 8;

/// JSONL {"id", "question", "options": [...], "answer_idx"}.
std::vector<QAExample> parse_dataset(std::string_view jsonl);
std::vector<QAExample> load_dataset(const std::filesystem::path& path);
std::string dump_dataset(const std::vector<QAExample>& examples);
void validate(const QAExample& ex);

struct PipelineConfig {
  bool pega = false;
  bool canp = false;
  /// Required when pega is set.
  std::optional<Chunker> chunker;
  double threshold = 0.0;
  CanpOptions canp_options;
};

/// Everything a working graph is built from. All members are borrowed.
struct Pipeline {
  const KnowledgeGraph& kg;
  const EmbeddingProvider& provider;
  const RelevanceScorer& scorer;
  PipelineConfig config;
};

/// The graph after each stage; pega/canp are set only when enabled.
struct StagedGraph {
  WorkingGraph raw;
  std::optional<WorkingGraph> pega;
  std::optional<WorkingGraph> canp;
  CanpOutcome canp_outcome;
  const WorkingGraph& final_graph() const { return canp ? *canp : pega ? *pega : raw; }
};

/// link -> extract -> context node -> features -> relevance -> threshold
/// -> [augment] -> [CANP].
StagedGraph build_option_graph(const Pipeline& pipeline, const QAExample& ex, int option);
std::vector<WorkingGraph> build_example_graphs(const Pipeline& pipeline, const QAExample& ex);

/// -log softmax(scores)[gold]; requires at least two scores.
ad::Var option_loss(ad::Var scores, std::size_t gold);
/// Scores of all options as a 1 x O row.
ad::Var score_options(ad::Tape& tape, GnnModel& model, const std::vector<WorkingGraph>& graphs);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr_gnn = 1e-3;
  std::uint64_t seed = 0;
  std::size_t layers = 5;
  std::size_t dim = 200;
  std::size_t d_rho = 32;
  PipelineConfig pipeline;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> dev_acc;
};

std::string metrics_line(const EpochMetrics& m);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<std::vector<double>> scores;
};

/// Prebuilt graphs of one dataset: graphs[i][o] for example i, option o.
struct PreparedSet {
  std::vector<QAExample> examples;
  std::vector<std::vector<WorkingGraph>> graphs;
};

PreparedSet prepare(const Pipeline& pipeline, std::vector<QAExample> examples);

/// Argmax per example, ties to the lowest option index. Throws
/// std::invalid_argument on an empty set.
EvalResult evaluate(GnnModel& model, const PreparedSet& data);

struct TrainResult {
  GnnModel model;
  std::vector<EpochMetrics> metrics;
};

/// Seeded mini-batch training with RAdam over the option cross-entropy.
/// Throws NumericError on a non-finite loss.
TrainResult train(const PreparedSet& train_set, const PreparedSet* dev_set, const RelationSpace& relations,
                  std::size_t d_in, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace grapeqa
