#include "grapeqa/kg.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "grapeqa/errors.hpp"
#include "grapeqa/text.hpp"

namespace grapeqa {

using nlohmann::json;

KnowledgeGraph::KnowledgeGraph(std::vector<std::string> labels, std::vector<std::string> relations,
                               const std::vector<KgEdge>& forward_edges)
    : labels_(std::move(labels)), relations_(std::move(relations)) {
  const auto n = labels_.size();
  edges_.reserve(forward_edges.size() * 2);
  for (const auto& e : forward_edges) {
    if (e.src < 0 || static_cast<std::size_t>(e.src) >= n || e.dst < 0 ||
        static_cast<std::size_t>(e.dst) >= n) {
      throw DataError("edge endpoint out of range");
    }
    if (e.rel < 0 || static_cast<std::size_t>(e.rel) >= relations_.size()) {
      throw DataError("edge relation out of range");
    }
    const RelationId fwd = 2 * e.rel;
    edges_.push_back({e.src, fwd, e.dst});
    edges_.push_back({e.dst, RelationSpace::inverse(fwd), e.src});
  }

  std::vector<std::vector<Neighbor>> adj(n);
  for (const auto& e : edges_) adj[static_cast<std::size_t>(e.src)].push_back({e.rel, e.dst});
  adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end(), [](const Neighbor& a, const Neighbor& b) {
      return std::tie(a.node, a.rel) < std::tie(b.node, b.rel);
    });
    adj_offsets_[i + 1] = adj_offsets_[i] + adj[i].size();
    adj_.insert(adj_.end(), adj[i].begin(), adj[i].end());
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto tokens = tokenize(labels_[i]);
    if (tokens.empty()) continue;
    max_label_tokens_ = std::max(max_label_tokens_, tokens.size());
    label_index_.emplace(join_tokens(tokens, 0, tokens.size()), static_cast<ConceptId>(i));
  }
}

std::string KnowledgeGraph::relation_name(RelationId rel) const {
  const auto k = static_cast<std::size_t>(rel / 2);
  if (rel < 0 || k >= relations_.size()) throw std::out_of_range("relation id out of range");
  return RelationSpace::is_inverse(rel) ? relations_[k] + "_inv" : relations_[k];
}

std::span<const KnowledgeGraph::Neighbor> KnowledgeGraph::neighbors(ConceptId id) const {
  const auto i = static_cast<std::size_t>(id);
  return std::span<const Neighbor>(adj_.data() + adj_offsets_.at(i),
                                   adj_offsets_.at(i + 1) - adj_offsets_[i]);
}

bool KnowledgeGraph::adjacent(ConceptId a, ConceptId b) const {
  auto nb = neighbors(a);
  return std::any_of(nb.begin(), nb.end(), [b](const Neighbor& x) { return x.node == b; });
}

std::optional<ConceptId> KnowledgeGraph::find(std::string_view normalized_label) const {
  auto it = label_index_.find(std::string(normalized_label));
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

namespace {

struct RawLine {
  std::size_t line_no;
  json value;
};

std::string line_error(std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << "line " << line_no << ": " << what;
  return os.str();
}

std::string require_string(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(line_error(line_no, std::string("missing string field \"") + key + "\""));
  }
  return it->get<std::string>();
}

}  // namespace

KnowledgeGraph parse_kg(std::string_view jsonl, const KgLoadOptions& options) {
  std::vector<RawLine> lines;
  {
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      json value;
      try {
        value = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(line_error(line_no, std::string("malformed JSON: ") + e.what()));
      }
      if (!value.is_object()) throw DataError(line_error(line_no, "expected a JSON object"));
      lines.push_back({line_no, std::move(value)});
    }
  }

  const bool explicit_nodes = std::any_of(lines.begin(), lines.end(),
                                          [](const RawLine& l) { return l.value.contains("node"); });

  std::vector<std::string> labels;
  std::unordered_map<std::string, ConceptId> node_ids;
  std::vector<std::string> relations;
  std::unordered_map<std::string, RelationId> relation_ids;

  auto add_node = [&](const std::string& label) {
    auto [it, inserted] = node_ids.emplace(label, static_cast<ConceptId>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };

  if (explicit_nodes) {
    for (const auto& l : lines) {
      if (!l.value.contains("node")) continue;
      auto label = require_string(l.value, "node", l.line_no);
      if (node_ids.count(label) != 0) {
        throw DataError(line_error(l.line_no, "duplicate node declaration \"" + label + "\""));
      }
      add_node(label);
    }
  }

  std::vector<KgEdge> forward;
  std::set<std::tuple<ConceptId, RelationId, ConceptId>> seen;
  for (const auto& l : lines) {
    if (l.value.contains("node")) continue;
    auto subj = require_string(l.value, "subj", l.line_no);
    auto rel = require_string(l.value, "rel", l.line_no);
    auto obj = require_string(l.value, "obj", l.line_no);

    auto resolve = [&](const std::string& label) -> ConceptId {
      auto it = node_ids.find(label);
      if (it != node_ids.end()) return it->second;
      if (explicit_nodes && !options.auto_create_nodes) {
        throw DataError(line_error(l.line_no, "undeclared node label \"" + label + "\""));
      }
      return add_node(label);
    };
    const ConceptId s = resolve(subj);
    const ConceptId t = resolve(obj);
    auto [rit, rel_new] = relation_ids.emplace(rel, static_cast<RelationId>(relations.size()));
    if (rel_new) relations.push_back(rel);
    const RelationId r = rit->second;
    if (!seen.emplace(s, r, t).second) {
      throw DataError(line_error(l.line_no, "duplicate triple (" + subj + ", " + rel + ", " + obj + ")"));
    }
    forward.push_back({s, r, t});
  }

  return KnowledgeGraph(std::move(labels), std::move(relations), forward);
}

KnowledgeGraph load_kg(const std::filesystem::path& path, const KgLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open knowledge graph file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_kg(buf.str(), options);
}

std::vector<EntityMatch> link_entities(std::string_view text, const KnowledgeGraph& kg,
                                       TextSource source) {
  std::vector<EntityMatch> matches;
  const auto tokens = tokenize(text);
  const std::size_t max_n = std::min(kMaxLinkTokens, kg.max_label_tokens());
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t n = std::min(max_n, tokens.size() - i); n >= 1; --n) {
      if (auto id = kg.find(join_tokens(tokens, i, i + n))) {
        matches.push_back({*id, tokens[i].start, tokens[i + n - 1].end, source});
        i += n;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return matches;
}

}  // namespace grapeqa
