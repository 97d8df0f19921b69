#include "grapeqa/qa.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "grapeqa/errors.hpp"
#include "grapeqa/io.hpp"
#include "grapeqa/optimizer.hpp"
#include "grapeqa/text.hpp"

namespace grapeqa {

using nlohmann::json;

void validate(const QAExample& ex) {
  if (ex.options.size() < kMinOptions || ex.options.size() > kMaxOptions) {
    throw DataError("example " + ex.id + ": " + std::to_string(ex.options.size()) + " options, expected " +
                    std::to_string(kMinOptions) + ".." + std::to_string(kMaxOptions));
  }
  if (ex.gold < 0 || static_cast<std::size_t>(ex.gold) >= ex.options.size()) {
    throw DataError("example " + ex.id + ": answer_idx " + std::to_string(ex.gold) + " out of range");
  }
  if (trim(ex.question).empty()) throw DataError("example " + ex.id + ": empty question");
}

std::vector<QAExample> parse_dataset(std::string_view jsonl) {
  std::vector<QAExample> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "dataset line " + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    QAExample ex;
    try {
      ex.id = j.at("id").get<std::string>();
      ex.question = j.at("question").get<std::string>();
      ex.options = j.at("options").get<std::vector<std::string>>();
      ex.gold = j.at("answer_idx").get<int>();
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    }
    try {
      validate(ex);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<QAExample> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path));
}

std::string dump_dataset(const std::vector<QAExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    json j = {{"id", ex.id}, {"question", ex.question}, {"options", ex.options}, {"answer_idx", ex.gold}};
    out += j.dump() + "\n";
  }
  return out;
}

StagedGraph build_option_graph(const Pipeline& p, const QAExample& ex, int option) {
  const auto& cfg = p.config;
  const std::string& a = ex.options.at(static_cast<std::size_t>(option));
  auto qm = link_entities(ex.question, p.kg, TextSource::Question);
  auto am = link_entities(a, p.kg, TextSource::Answer);

  WorkingGraph wg = build_working_graph(extract_subgraph(p.kg, qm, am), ex.question, a);
  wg.option_index = option;
  wg = init_node_features(std::move(wg), p.provider, p.provider.dim());
  wg = score_working_graph(p.scorer, std::move(wg));
  wg = threshold_prune(std::move(wg), cfg.threshold);

  StagedGraph out;
  out.raw = wg;
  if (cfg.pega) {
    if (!cfg.chunker) throw std::invalid_argument("PEGA enabled without a chunker");
    auto chunks = extract_chunks(*cfg.chunker, ChunkRequest{ex.id, option, ex.question, a});
    wg = augment(std::move(wg), chunks, p.provider);
    out.pega = wg;
  }
  if (cfg.canp) out.canp = canp_prune(std::move(wg), p.scorer, cfg.canp_options, &out.canp_outcome);
  return out;
}

std::vector<WorkingGraph> build_example_graphs(const Pipeline& p, const QAExample& ex) {
  std::vector<WorkingGraph> out;
  for (std::size_t o = 0; o < ex.options.size(); ++o) {
    out.push_back(build_option_graph(p, ex, static_cast<int>(o)).final_graph());
  }
  return out;
}

ad::Var option_loss(ad::Var scores, std::size_t gold) {
  if (scores.rows() != 1 || scores.cols() < 2) {
    throw std::invalid_argument("option loss needs a 1 x O row with O >= 2, got " + scores.value().shape_string());
  }
  return ad::cross_entropy(scores, gold);
}

ad::Var score_options(ad::Tape& tape, GnnModel& model, const std::vector<WorkingGraph>& graphs) {
  std::vector<ad::Var> parts;
  parts.reserve(graphs.size());
  for (const auto& g : graphs) parts.push_back(model.score_option(tape, g));
  return ad::concat_cols(parts);
}

std::string metrics_line(const EpochMetrics& m) {
  json j = {{"epoch", m.epoch}, {"train_loss", m.train_loss}, {"train_acc", m.train_acc}};
  j["dev_acc"] = m.dev_acc ? json(*m.dev_acc) : json(nullptr);
  return j.dump();
}

PreparedSet prepare(const Pipeline& pipeline, std::vector<QAExample> examples) {
  PreparedSet out;
  out.graphs.reserve(examples.size());
  for (const auto& ex : examples) {
    validate(ex);
    out.graphs.push_back(build_example_graphs(pipeline, ex));
  }
  out.examples = std::move(examples);
  return out;
}

namespace {

int argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

EvalResult evaluate(GnnModel& model, const PreparedSet& data) {
  if (data.examples.empty()) throw std::invalid_argument("evaluation on an empty dataset");
  EvalResult r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    ad::Tape tape;
    auto s = score_options(tape, model, data.graphs[i]);
    std::vector<double> scores = s.value().data;
    const int pred = argmax(scores);
    if (pred == data.examples[i].gold) ++correct;
    r.predictions.push_back(pred);
    r.scores.push_back(std::move(scores));
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.examples.size());
  return r;
}

TrainResult train(const PreparedSet& train_set, const PreparedSet* dev_set, const RelationSpace& relations,
                  std::size_t d_in, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  const std::size_t n = train_set.examples.size();
  if (n == 0) throw std::invalid_argument("training on an empty dataset");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");

  GnnConfig gc;
  gc.d_in = d_in;
  gc.dim = config.dim;
  gc.layers = config.layers;
  gc.d_rho = config.d_rho;
  gc.num_relations = relations.size();
  gc.seed = config.seed;
  TrainResult result{GnnModel(gc), {}};
  GnnModel& model = result.model;
  RAdam opt(model.parameters(), {{kGnnGroup, config.lr_gnn}});

  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      opt.zero_grad();
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t i = order[k];
        const auto& ex = train_set.examples[i];
        ad::Tape tape;
        auto scores = score_options(tape, model, train_set.graphs[i]);
        auto loss = option_loss(scores, static_cast<std::size_t>(ex.gold));
        const double lv = loss.value().data[0];
        if (!std::isfinite(lv)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", example " + ex.id);
        }
        loss_sum += lv;
        if (argmax(scores.value().data) == ex.gold) ++correct;
        tape.backward(loss);
      }
      opt.step(1.0 / static_cast<double>(e - b));
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    if (dev_set != nullptr && !dev_set->examples.empty()) m.dev_acc = evaluate(model, *dev_set).accuracy;
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

}  // namespace grapeqa
