#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grapeqa/checkpoint.hpp"
#include "grapeqa/errors.hpp"
#include "grapeqa/gradcheck.hpp"
#include "grapeqa/io.hpp"
#include "grapeqa/qa.hpp"
#include "grapeqa/stats.hpp"
#include "grapeqa/synthetic.hpp"
#include "grapeqa/wg_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace grapeqa;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct PipelineArgs {
  std::string kg;
  std::string data;
  std::string embeddings;
  std::size_t hash_dim = 64;
  std::uint64_t embed_seed = 0;
  std::size_t d_rho = 32;
  bool pega = false;
  bool canp = false;
  std::string chunker = "rule";
  std::string lexicon;
  double threshold = 0.0;
  std::size_t min_survivors = 0;
  bool auto_create_nodes = false;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a, bool need_data = true) {
  auto* kg = cmd->add_option("--kg", a.kg, "knowledge graph JSONL");
  auto* data = cmd->add_option("--data", a.data, "dataset JSONL");
  if (need_data) {
    kg->required();
    data->required();
  }
  cmd->add_option("--embeddings", a.embeddings, "embeddings JSONL (default: hash provider)");
  cmd->add_option("--hash-dim", a.hash_dim, "hash provider dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--embed-seed", a.embed_seed, "hash provider and relevance scorer seed");
  cmd->add_option("--d-rho", a.d_rho, "relevance embedding size")->check(CLI::PositiveNumber);
  cmd->add_flag("--pega", a.pega, "add noun-chunk nodes");
  cmd->add_flag("--canp", a.canp, "prune the lowest-relevance extra-node cluster");
  cmd->add_option("--chunker", a.chunker, "rule | random:FRAC | external:PATH");
  cmd->add_option("--lexicon", a.lexicon, "POS lexicon JSONL for the rule chunker");
  cmd->add_option("--threshold", a.threshold, "relevance threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--canp-min-survivors", a.min_survivors, "veto pruning that leaves fewer extra nodes");
  cmd->add_flag("--auto-create-nodes", a.auto_create_nodes, "create undeclared KG labels");
}

Chunker make_chunker(const PipelineArgs& a) {
  const std::string& spec = a.chunker;
  if (spec == "rule") {
    if (a.lexicon.empty()) throw UsageError("--chunker rule needs --lexicon");
    return RuleBasedChunker{std::make_shared<PosLexicon>(PosLexicon::load(a.lexicon))};
  }
  if (spec.rfind("random:", 0) == 0) {
    double frac = 0.0;
    try {
      std::size_t used = 0;
      frac = std::stod(spec.substr(7), &used);
      if (used != spec.size() - 7) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw UsageError("bad chunker fraction in " + spec);
    }
    if (!(frac > 0.0 && frac <= 1.0)) throw UsageError("chunker fraction must be in (0, 1]");
    return RandomWordsChunker{frac, a.embed_seed};
  }
  if (spec.rfind("external:", 0) == 0 && spec.size() > 9) {
    return ExternalChunker{std::make_shared<ChunkTable>(ChunkTable::load(spec.substr(9)))};
  }
  throw UsageError("unknown chunker " + spec);
}

/// Owns everything a Pipeline borrows.
struct Loaded {
  KnowledgeGraph kg;
  std::unique_ptr<EmbeddingProvider> provider;
  std::optional<RelevanceScorer> scorer;
  PipelineConfig config;

  Pipeline pipeline() const { return Pipeline{kg, *provider, *scorer, config}; }
};

Loaded load_inputs(const PipelineArgs& a) {
  Loaded l;
  if (a.pega) l.config.chunker = make_chunker(a);
  l.config.pega = a.pega;
  l.config.canp = a.canp;
  l.config.threshold = a.threshold;
  l.config.canp_options.min_survivors = a.min_survivors;
  l.kg = load_kg(a.kg, KgLoadOptions{a.auto_create_nodes});
  if (a.embeddings.empty()) {
    l.provider = std::make_unique<HashEmbeddingProvider>(a.hash_dim, a.embed_seed);
  } else {
    l.provider = std::make_unique<FileEmbeddingProvider>(FileEmbeddingProvider::load(a.embeddings));
  }
  return l;
}

std::vector<QAExample> load_nonempty(const std::string& path) {
  auto d = load_dataset(path);
  if (d.empty()) throw DataError("dataset " + path + " is empty");
  return d;
}

json pipeline_meta(const PipelineArgs& a) {
  return {{"pega", a.pega},
          {"canp", a.canp},
          {"chunker", a.pega ? json(a.chunker) : json(nullptr)},
          {"threshold", a.threshold},
          {"canp_min_survivors", a.min_survivors},
          {"embeddings", a.embeddings.empty() ? json("hash") : json(a.embeddings)},
          {"hash_dim", a.hash_dim},
          {"embed_seed", a.embed_seed}};
}

void emit(const json& j, bool as_json, const std::string& human) {
  if (as_json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << human << "\n";
  }
}

// ---- build-wg

int run_build_wg(const PipelineArgs& a, const std::string& out_dir) {
  Loaded l = load_inputs(a);
  l.scorer = RelevanceScorer::random(*l.provider, a.d_rho, a.embed_seed);
  const auto data = load_nonempty(a.data);
  fs::create_directories(out_dir);
  const Pipeline p = l.pipeline();
  std::size_t files = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t o = 0; o < data[i].options.size(); ++o) {
      const auto staged = build_option_graph(p, data[i], static_cast<int>(o));
      std::string body = wg_to_json(staged.raw, data[i].id, "raw").dump() + "\n";
      if (staged.pega) body += wg_to_json(*staged.pega, data[i].id, "pega").dump() + "\n";
      if (staged.canp) body += wg_to_json(*staged.canp, data[i].id, "canp").dump() + "\n";
      char name[64];
      std::snprintf(name, sizeof name, "wg_%05zu_%zu.jsonl", i, o);
      write_file_atomic(fs::path(out_dir) / name, body);
      ++files;
    }
  }
  std::cout << json{{"files", files}, {"out", out_dir}}.dump() << "\n";
  return 0;
}

// ---- stats

json stats_json(const std::map<std::string, StatsAccumulator>& by_stage, const std::string& final_stage) {
  json out = by_stage.at(final_stage).report().to_json();
  out["stage"] = final_stage;
  json stages = json::object();
  for (const auto& [stage, acc] : by_stage) stages[stage] = acc.report().to_json();
  out["stages"] = std::move(stages);
  return out;
}

int run_stats(const PipelineArgs& a, const std::vector<std::string>& wg_paths) {
  std::map<std::string, StatsAccumulator> by_stage;
  std::string final_stage = "raw";
  auto rank = [](const std::string& s) { return s == "canp" ? 2 : s == "pega" ? 1 : 0; };

  if (!wg_paths.empty()) {
    if (!a.kg.empty() || !a.data.empty()) throw UsageError("give either WG files or --kg/--data, not both");
    std::vector<fs::path> files;
    for (const auto& p : wg_paths) {
      if (fs::is_directory(p)) {
        for (const auto& e : fs::directory_iterator(p)) {
          if (e.path().extension() == ".jsonl") files.push_back(e.path());
        }
      } else {
        files.emplace_back(p);
      }
    }
    std::sort(files.begin(), files.end());
    // relation ids are range-checked against the largest id space a record could use
    RelationSpace loose{1u << 20};
    for (const auto& f : files) {
      const std::string text = read_text_file(f);
      std::size_t start = 0;
      while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::parse_error& e) {
          throw DataError(f.string() + ": malformed JSON (" + e.what() + ")");
        }
        auto tagged = wg_from_json(j, loose);
        if (rank(tagged.stage) > rank(final_stage)) final_stage = tagged.stage;
        by_stage[tagged.stage].add(tagged.graph);
      }
    }
    if (by_stage.empty()) throw DataError("no working graphs found");
  } else {
    if (a.kg.empty() || a.data.empty()) throw UsageError("stats needs WG files or --kg and --data");
    Loaded l = load_inputs(a);
    l.scorer = RelevanceScorer::random(*l.provider, a.d_rho, a.embed_seed);
    const auto data = load_nonempty(a.data);
    const Pipeline p = l.pipeline();
    for (const auto& ex : data) {
      for (std::size_t o = 0; o < ex.options.size(); ++o) {
        const auto staged = build_option_graph(p, ex, static_cast<int>(o));
        by_stage["raw"].add(staged.raw);
        if (staged.pega) by_stage["pega"].add(*staged.pega);
        if (staged.canp) by_stage["canp"].add(*staged.canp);
      }
    }
    final_stage = a.canp ? "canp" : a.pega ? "pega" : "raw";
  }
  std::cout << stats_json(by_stage, final_stage).dump() << "\n";
  return 0;
}

// ---- train / eval

struct TrainArgs {
  std::string dev;
  std::string out;
  std::size_t layers = 5;
  std::size_t dim = 200;
  std::size_t epochs = 50;
  std::size_t batch = 32;
  double lr_gnn = 1e-3;
  std::uint64_t seed = 0;
};

int run_train(const PipelineArgs& a, const TrainArgs& t, bool as_json) {
  Loaded l = load_inputs(a);
  l.scorer = RelevanceScorer::random(*l.provider, a.d_rho, a.embed_seed);
  const Pipeline p = l.pipeline();
  const auto train_set = prepare(p, load_nonempty(a.data));
  std::optional<PreparedSet> dev;
  if (!t.dev.empty()) dev = prepare(p, load_nonempty(t.dev));

  TrainConfig tc;
  tc.epochs = t.epochs;
  tc.batch_size = t.batch;
  tc.lr_gnn = t.lr_gnn;
  tc.seed = t.seed;
  tc.layers = t.layers;
  tc.dim = t.dim;
  tc.d_rho = a.d_rho;
  tc.pipeline = l.config;

  std::string metrics;
  auto result = train(train_set, dev ? &*dev : nullptr, l.kg.relation_space(), l.provider->dim(), tc,
                      [&](const EpochMetrics& m) {
                        metrics += metrics_line(m) + "\n";
                        if (!as_json) std::cerr << metrics_line(m) << "\n";
                      });
  fs::create_directories(t.out);
  write_file_atomic(fs::path(t.out) / "metrics.jsonl", metrics);
  json meta = {{"pipeline", pipeline_meta(a)},
               {"train", {{"epochs", t.epochs}, {"batch", t.batch}, {"lr_gnn", t.lr_gnn}, {"seed", t.seed}}}};
  save_checkpoint(fs::path(t.out) / "model.gqa", make_checkpoint(result.model, *l.scorer, meta));

  const auto& last = result.metrics.back();
  json summary = {{"epochs", t.epochs},
                  {"train_loss", last.train_loss},
                  {"train_acc", last.train_acc},
                  {"dev_acc", last.dev_acc ? json(*last.dev_acc) : json(nullptr)},
                  {"checkpoint", (fs::path(t.out) / "model.gqa").string()}};
  emit(summary, as_json, "trained " + std::to_string(t.epochs) + " epochs, checkpoint " +
                             (fs::path(t.out) / "model.gqa").string());
  return 0;
}

int run_eval(const PipelineArgs& a, const std::string& ckpt_path, bool as_json) {
  Loaded l = load_inputs(a);
  const auto ckpt = load_checkpoint(ckpt_path);
  if (ckpt.config.d_in != l.provider->dim()) {
    throw DataError("checkpoint expects " + std::to_string(ckpt.config.d_in) + "-dim features, provider gives " +
                    std::to_string(l.provider->dim()));
  }
  l.scorer = restore_scorer(ckpt, *l.provider);
  GnnModel model(ckpt.config);
  restore_model(ckpt, model);
  const auto data = prepare(l.pipeline(), load_nonempty(a.data));
  const auto r = evaluate(model, data);
  std::size_t correct = 0;
  json preds = json::array();
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    correct += r.predictions[i] == data.examples[i].gold ? 1 : 0;
    preds.push_back({{"id", data.examples[i].id}, {"prediction", r.predictions[i]}, {"scores", r.scores[i]}});
  }
  json out = {{"accuracy", r.accuracy}, {"correct", correct}, {"examples", data.examples.size()},
              {"predictions", std::move(preds)}};
  char line[96];
  std::snprintf(line, sizeof line, "accuracy %.4f (%zu/%zu)", r.accuracy, correct, data.examples.size());
  emit(out, as_json, line);
  return 0;
}

// ---- gradcheck / synth

int run_gradcheck(const GradcheckOptions& o, bool as_json) {
  const auto r = gradient_check(o);
  const bool ok = r.max_rel_error < 1e-4;
  char line[160];
  std::snprintf(line, sizeof line, "%s: max relative error %.3e over %zu entries (worst %s)", ok ? "ok" : "FAILED",
                r.max_rel_error, r.checked, r.worst.c_str());
  emit({{"pass", ok}, {"max_rel_error", r.max_rel_error}, {"checked", r.checked}, {"worst", r.worst},
        {"graph_nodes", r.graph_nodes}},
       as_json, line);
  return ok ? 0 : 1;
}

int run_synth(const std::string& task_name, const SyntheticOptions& o, const std::string& out_dir) {
  SyntheticTask task;
  if (task_name == "path") {
    task = planted_path_task(o);
  } else if (task_name == "chunk") {
    task = planted_chunk_task(o);
  } else {
    throw UsageError("unknown task " + task_name);
  }
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "kg.jsonl", task.kg_jsonl);
  write_file_atomic(dir / "train.jsonl", dump_dataset(task.train));
  write_file_atomic(dir / "test.jsonl", dump_dataset(task.test));
  if (!task.lexicon_jsonl.empty()) write_file_atomic(dir / "lexicon.jsonl", task.lexicon_jsonl);
  std::cout << json{{"train", task.train.size()}, {"test", task.test.size()}, {"out", out_dir}}.dump() << "\n";
  return 0;
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GrapeQA working-graph pipeline and reasoning model"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable stdout");

  PipelineArgs pa;
  std::string out_dir;

  auto* build = app.add_subcommand("build-wg", "write one working-graph file per option");
  add_pipeline_options(build, pa);
  build->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::string> wg_paths;
  auto* stats = app.add_subcommand("stats", "node statistics of working graphs");
  add_pipeline_options(stats, pa, false);
  stats->add_option("wg", wg_paths, "WG JSONL files or directories");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "train the reasoning model");
  add_pipeline_options(trn, pa);
  trn->add_option("--dev", ta.dev, "dev dataset JSONL");
  trn->add_option("--out", ta.out, "output directory for model.gqa and metrics.jsonl")->required();
  trn->add_option("--layers", ta.layers, "message-passing layers")->check(CLI::PositiveNumber);
  trn->add_option("--dim", ta.dim, "hidden size")->check(CLI::PositiveNumber);
  trn->add_option("--epochs", ta.epochs, "epochs")->check(CLI::PositiveNumber);
  trn->add_option("--batch", ta.batch, "batch size")->check(CLI::PositiveNumber);
  trn->add_option("--lr-gnn", ta.lr_gnn, "learning rate")->check(CLI::PositiveNumber);
  trn->add_option("--seed", ta.seed, "model init and shuffling seed");

  std::string ckpt;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_pipeline_options(ev, pa);
  ev->add_option("--checkpoint", ckpt, "model.gqa")->required();

  GradcheckOptions go;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc->add_option("--seed", go.seed);
  gc->add_option("--dim", go.dim)->check(CLI::PositiveNumber);
  gc->add_option("--layers", go.layers)->check(CLI::PositiveNumber);

  std::string task_name = "path";
  SyntheticOptions so;
  auto* syn = app.add_subcommand("synth", "generate a planted-rule corpus");
  syn->add_option("--task", task_name, "path | chunk");
  syn->add_option("--train", so.train);
  syn->add_option("--test", so.test);
  syn->add_option("--options", so.options);
  syn->add_option("--seed", so.seed);
  syn->add_option("--out", out_dir, "output directory")->required();

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->add_flag("--json", as_json, "machine-readable stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*build) return run_build_wg(pa, out_dir);
    if (*stats) return run_stats(pa, wg_paths);
    if (*trn) return run_train(pa, ta, as_json);
    if (*ev) return run_eval(pa, ckpt, as_json);
    if (*gc) return run_gradcheck(go, as_json);
    if (*syn) return run_synth(task_name, so, out_dir);
  } catch (const UsageError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    report_error("data", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    report_error("numeric", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kExitData;
  }
  return kExitUsage;
}
