#include "grapeqa/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "grapeqa/errors.hpp"
#include "grapeqa/tensor.hpp"
#include "grapeqa/text.hpp"

namespace grapeqa {

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

Vec HashEmbeddingProvider::embed(std::string_view text) const {
  const auto key = normalize(text);
  if (key.empty()) throw DataError("cannot embed empty text");
  Rng rng(fnv1a(key, seed_));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
  Vec out(dim_);
  for (auto& x : out) x = rng.normal() * scale;
  return out;
}

std::vector<std::string> HashEmbeddingProvider::subtokens(std::string_view text) const {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) out.push_back(std::move(tok.text));
  return out;
}

FileEmbeddingProvider FileEmbeddingProvider::parse(std::string_view jsonl) {
  FileEmbeddingProvider p;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto where = [&] { return "embeddings line " + std::to_string(line_no) + ": "; };
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where() + "malformed JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("key") || !rec["key"].is_string() ||
        !rec.contains("vector") || !rec["vector"].is_array()) {
      throw DataError(where() + "expected {\"key\": string, \"vector\": [numbers]}");
    }
    auto key = rec["key"].get<std::string>();
    Vec v;
    for (const auto& x : rec["vector"]) {
      if (!x.is_number()) throw DataError(where() + "non-numeric vector entry");
      v.push_back(x.get<double>());
      if (!std::isfinite(v.back())) throw DataError(where() + "non-finite vector entry");
    }
    if (v.empty()) throw DataError(where() + "empty vector");
    if (p.dim_ == 0) p.dim_ = v.size();
    if (v.size() != p.dim_) {
      throw DataError(where() + "dimension " + std::to_string(v.size()) + " differs from " +
                      std::to_string(p.dim_));
    }
    if (p.vectors_.count(key) != 0) throw DataError(where() + "duplicate key \"" + key + "\"");
    if (rec.contains("subtokens")) {
      if (!rec["subtokens"].is_array()) throw DataError(where() + "\"subtokens\" must be an array");
      p.subtokens_[key] = rec["subtokens"].get<std::vector<std::string>>();
    }
    p.vectors_.emplace(std::move(key), std::move(v));
  }
  if (p.vectors_.empty()) throw DataError("embeddings file has no records");
  return p;
}

FileEmbeddingProvider FileEmbeddingProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Vec FileEmbeddingProvider::embed(std::string_view text) const {
  auto it = vectors_.find(std::string(text));
  if (it == vectors_.end()) throw DataError("no embedding for text \"" + std::string(text) + "\"");
  return it->second;
}

std::vector<std::string> FileEmbeddingProvider::subtokens(std::string_view text) const {
  auto it = subtokens_.find(std::string(text));
  if (it != subtokens_.end()) return it->second;
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

Vec mean_subtoken_embedding(const EmbeddingProvider& provider, std::string_view text) {
  const auto pieces = provider.subtokens(text);
  if (pieces.empty()) throw DataError("text \"" + std::string(text) + "\" has no sub-tokens");
  Vec sum(provider.dim(), 0.0);
  for (const auto& piece : pieces) {
    const auto v = provider.embed(piece);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  for (auto& x : sum) x /= static_cast<double>(pieces.size());
  return sum;
}

}  // namespace grapeqa
