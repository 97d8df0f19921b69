#include "grapeqa/pega.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "grapeqa/errors.hpp"
#include "grapeqa/tensor.hpp"
#include "grapeqa/text.hpp"

namespace grapeqa {

using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void for_each_json_line(std::string_view jsonl, const char* what, Fn&& fn) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = std::string(what) + " line " + std::to_string(line_no) + ": ";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    }
    if (!rec.is_object()) throw DataError(where + "expected a JSON object");
    try {
      fn(rec, where);
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    }
  }
}

Pos parse_pos(const std::string& s, const std::string& where) {
  if (s == "DET") return Pos::Det;
  if (s == "ADJ") return Pos::Adj;
  if (s == "NOUN") return Pos::Noun;
  if (s == "OTHER") return Pos::Other;
  throw DataError(where + "unknown POS tag \"" + s + "\"");
}

TextSource source_of(std::size_t end, std::size_t question_size) {
  return end <= question_size ? TextSource::Question : TextSource::Answer;
}

std::vector<NounChunk> dedupe(std::vector<NounChunk> chunks) {
  std::stable_sort(chunks.begin(), chunks.end(),
                   [](const NounChunk& a, const NounChunk& b) { return a.start < b.start; });
  std::set<std::string> seen;
  std::vector<NounChunk> out;
  for (auto& c : chunks) {
    auto key = normalize(c.text);
    if (key.empty() || !seen.insert(key).second) continue;
    out.push_back(std::move(c));
  }
  return out;
}

// Tokens of the context text "question option" with offsets into it.
std::vector<Token> context_tokens(const ChunkRequest& req, std::string& ctx) {
  ctx = context_text(req.question, req.option);
  return tokenize(ctx);
}

std::vector<NounChunk> rule_chunks(const RuleBasedChunker& chunker, const ChunkRequest& req) {
  if (!chunker.lexicon) throw std::invalid_argument("rule-based chunker has no lexicon");
  std::string ctx;
  const auto all = context_tokens(req, ctx);
  const std::size_t qsize = req.question.size();
  std::vector<NounChunk> out;
  // Chunks never straddle the question/option boundary.
  for (int part = 0; part < 2; ++part) {
    std::vector<Token> toks;
    for (const auto& t : all) {
      if ((t.end <= qsize) == (part == 0)) toks.push_back(t);
    }
    std::vector<Pos> tags;
    for (const auto& t : toks) tags.push_back(chunker.lexicon->lookup(t.text));
    std::size_t i = 0;
    while (i < toks.size()) {
      std::size_t j = i;
      if (tags[j] == Pos::Det) ++j;
      while (j < toks.size() && tags[j] == Pos::Adj) ++j;
      const std::size_t noun_start = j;
      while (j < toks.size() && tags[j] == Pos::Noun) ++j;
      if (j > noun_start) {
        NounChunk c;
        c.start = toks[i].start;
        c.end = toks[j - 1].end;
        c.text = ctx.substr(c.start, c.end - c.start);
        c.source = part == 0 ? TextSource::Question : TextSource::Answer;
        out.push_back(std::move(c));
        i = j;
      } else {
        ++i;
      }
    }
  }
  return out;
}

std::vector<NounChunk> random_chunks(const RandomWordsChunker& chunker, const ChunkRequest& req) {
  if (!(chunker.fraction > 0.0 && chunker.fraction <= 1.0)) {
    throw std::invalid_argument("random chunk fraction must lie in (0, 1]");
  }
  std::string ctx;
  const auto toks = context_tokens(req, ctx);
  if (toks.empty()) return {};
  // The small slack absorbs representation error such as 0.2 * 10 > 2.
  auto k = static_cast<std::size_t>(std::ceil(chunker.fraction * static_cast<double>(toks.size()) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, toks.size());

  Rng rng(chunker.seed ^ fnv1a(ctx));
  std::vector<std::size_t> order(toks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + rng.below(order.size() - i)]);
  }
  std::vector<NounChunk> out;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& t = toks[order[i]];
    out.push_back({ctx.substr(t.start, t.end - t.start), t.start, t.end, source_of(t.end, req.question.size())});
  }
  return out;
}

std::vector<NounChunk> external_chunks(const ExternalChunker& chunker, const ChunkRequest& req) {
  if (!chunker.table) throw std::invalid_argument("external chunker has no chunk table");
  const auto* found = chunker.table->find(req.example_id, req.option_idx);
  if (found == nullptr) {
    throw DataError("chunk file has no entry for example \"" + req.example_id + "\" option " +
                    std::to_string(req.option_idx));
  }
  const std::size_t ctx_size = req.question.size() + 1 + req.option.size();
  std::vector<NounChunk> out = *found;
  for (auto& c : out) {
    if (c.end > ctx_size) {
      throw DataError("chunk \"" + c.text + "\" of example \"" + req.example_id + "\" exceeds the QA text");
    }
    c.source = source_of(c.end, req.question.size());
  }
  return out;
}

}  // namespace

PosLexicon PosLexicon::parse(std::string_view jsonl) {
  PosLexicon lex;
  for_each_json_line(jsonl, "lexicon", [&](const json& rec, const std::string& where) {
    if (!rec.contains("token") || !rec.contains("pos")) throw DataError(where + "expected {\"token\", \"pos\"}");
    lex.add(rec.at("token").get<std::string>(), parse_pos(rec.at("pos").get<std::string>(), where));
  });
  return lex;
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) { return parse(slurp(path, "lexicon")); }

void PosLexicon::add(std::string_view token, Pos pos) { tags_[normalize(token)] = pos; }

Pos PosLexicon::lookup(std::string_view token) const {
  auto it = tags_.find(std::string(token));
  return it == tags_.end() ? Pos::Other : it->second;
}

ChunkTable ChunkTable::parse(std::string_view jsonl) {
  ChunkTable table;
  for_each_json_line(jsonl, "chunk file", [&](const json& rec, const std::string& where) {
    if (!rec.contains("example_id") || !rec.contains("option_idx") || !rec.contains("chunks")) {
      throw DataError(where + "expected {\"example_id\", \"option_idx\", \"chunks\"}");
    }
    auto key = std::make_pair(rec.at("example_id").get<std::string>(), rec.at("option_idx").get<int>());
    std::vector<NounChunk> chunks;
    for (const auto& c : rec.at("chunks")) {
      NounChunk nc;
      nc.text = c.at("text").get<std::string>();
      nc.start = c.at("start").get<std::size_t>();
      nc.end = c.at("end").get<std::size_t>();
      if (nc.text.empty() || nc.end <= nc.start) throw DataError(where + "chunk with empty text or span");
      chunks.push_back(std::move(nc));
    }
    if (!table.table_.emplace(std::move(key), std::move(chunks)).second) {
      throw DataError(where + "duplicate (example_id, option_idx) entry");
    }
  });
  return table;
}

ChunkTable ChunkTable::load(const std::filesystem::path& path) { return parse(slurp(path, "chunk file")); }

const std::vector<NounChunk>* ChunkTable::find(const std::string& example_id, int option_idx) const {
  auto it = table_.find({example_id, option_idx});
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<NounChunk> extract_chunks(const Chunker& chunker, const ChunkRequest& request) {
  if (trim(request.question).empty()) throw std::invalid_argument("chunk extraction needs a question");
  auto chunks = std::visit(
      [&](const auto& c) -> std::vector<NounChunk> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, RuleBasedChunker>) return rule_chunks(c, request);
        else if constexpr (std::is_same_v<T, RandomWordsChunker>) return random_chunks(c, request);
        else return external_chunks(c, request);
      },
      chunker);
  return dedupe(std::move(chunks));
}

WorkingGraph augment(WorkingGraph wg, const std::vector<NounChunk>& chunks, const EmbeddingProvider& provider) {
  if (wg.context_node() == nullptr) throw std::logic_error("augmentation requires a context node");
  if (wg.count(NodeKind::NounChunk) != 0) throw std::logic_error("working graph is already augmented");
  const auto distinct = dedupe(chunks);
  if (distinct.empty()) return wg;

  std::vector<LocalId> old_ids;
  for (const auto& n : wg.nodes) old_ids.push_back(n.id);
  const auto& rs = wg.relations;

  std::vector<LocalId> chunk_ids;
  LocalId next = wg.next_id();
  for (const auto& c : distinct) {
    const LocalId id = next++;
    Vec feature;
    try {
      feature = mean_subtoken_embedding(provider, c.text);
    } catch (const DataError& e) {
      throw DataError("noun chunk node " + std::to_string(id) + ": " + e.what());
    }
    wg.nodes.push_back({id, NodeKind::NounChunk, c.text, std::nullopt});
    wg.features[id] = std::move(feature);
    chunk_ids.push_back(id);
  }
  for (std::size_t i = 0; i < chunk_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < chunk_ids.size(); ++j) {
      wg.edges.push_back({chunk_ids[i], rs.chunk_chunk(), chunk_ids[j]});
      wg.edges.push_back({chunk_ids[j], rs.chunk_chunk_inverse(), chunk_ids[i]});
    }
  }
  for (LocalId c : chunk_ids) {
    for (LocalId v : old_ids) {
      wg.edges.push_back({c, rs.chunk_other(), v});
      wg.edges.push_back({v, rs.chunk_other_inverse(), c});
    }
  }
  return wg;
}

}  // namespace grapeqa
