#include "grapeqa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "grapeqa/errors.hpp"
#include "grapeqa/io.hpp"

namespace grapeqa {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'G', 'Q', 'A', '1'};
const char* const kRelHead = "relevance.head";
const char* const kRelWeights = "relevance.score_w";
const char* const kRelBias = "relevance.score_b";

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw DataError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

Checkpoint make_checkpoint(const GnnModel& model, const RelevanceScorer& scorer, json meta) {
  Checkpoint c;
  c.config = model.config();
  for (const auto* p : model.parameters()) c.tensors.emplace_back(p->name, p->value);
  c.tensors.emplace_back(kRelHead, scorer.head());
  c.tensors.emplace_back(kRelWeights, scorer.score_weights());
  c.tensors.emplace_back(kRelBias, Tensor(1, 1, scorer.score_bias()));
  c.meta = meta.is_null() ? json::object() : std::move(meta);
  return c;
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["dim"] = ckpt.config.dim;
  header["layers"] = ckpt.config.layers;
  header["d_in"] = ckpt.config.d_in;
  header["d_rho"] = ckpt.config.d_rho;
  header["num_relations"] = ckpt.config.num_relations;
  header["seed"] = ckpt.config.seed;
  header["tensors"] = json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    header["tensors"].push_back({{"name", name}, {"shape", {t.rows, t.cols}}});
  }
  header["meta"] = ckpt.meta;
  const std::string text = header.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(ckpt.config.dim));
  put_u32(out, static_cast<std::uint32_t>(ckpt.config.layers));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : ckpt.tensors) {
    for (double v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 16 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw DataError("not a GQA1 checkpoint");
  }
  std::size_t pos = 4;
  const auto dim = get_u32(bytes, pos);
  const auto layers = get_u32(bytes, pos);
  const auto hlen = get_u32(bytes, pos);
  if (pos + hlen > bytes.size()) throw DataError("checkpoint header truncated");
  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + hlen));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  pos += hlen;

  Checkpoint c;
  try {
    c.config.dim = header.at("dim").get<std::size_t>();
    c.config.layers = header.at("layers").get<std::size_t>();
    c.config.d_in = header.at("d_in").get<std::size_t>();
    c.config.d_rho = header.at("d_rho").get<std::size_t>();
    c.config.num_relations = header.at("num_relations").get<std::size_t>();
    c.config.seed = header.at("seed").get<std::uint64_t>();
    c.meta = header.value("meta", json::object());
    if (c.config.dim != dim || c.config.layers != layers) {
      throw DataError("checkpoint header disagrees with its fixed fields");
    }
    for (const auto& t : header.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw DataError("checkpoint tensor shapes must be 2-d");
      Tensor v(shape[0], shape[1]);
      for (auto& x : v.data) x = static_cast<double>(std::bit_cast<float>(get_u32(bytes, pos)));
      c.tensors.emplace_back(t.at("name").get<std::string>(), std::move(v));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (pos != bytes.size()) throw DataError("checkpoint has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void restore_model(const Checkpoint& ckpt, GnnModel& model) {
  std::map<std::string, const Tensor*> stored;
  for (const auto& [name, t] : ckpt.tensors) stored.emplace(name, &t);
  std::vector<std::string> problems;
  std::set<std::string> used = {kRelHead, kRelWeights, kRelBias};
  for (auto* p : model.parameters()) {
    auto it = stored.find(p->name);
    if (it == stored.end()) {
      problems.push_back(p->name + ": missing (expected " + p->value.shape_string() + ")");
      continue;
    }
    used.insert(p->name);
    if (!it->second->same_shape(p->value)) {
      problems.push_back(p->name + ": shape " + it->second->shape_string() + ", expected " +
                         p->value.shape_string());
    }
  }
  for (const auto& [name, t] : stored) {
    if (used.count(name) == 0) problems.push_back(name + ": not part of the model");
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "checkpoint does not match the model:";
    for (const auto& p : problems) os << "\n  " << p;
    throw DataError(os.str());
  }
  for (auto* p : model.parameters()) p->value = *stored.at(p->name);
}

RelevanceScorer restore_scorer(const Checkpoint& ckpt, const EmbeddingProvider& encoder) {
  const Tensor* head = nullptr;
  const Tensor* w = nullptr;
  const Tensor* b = nullptr;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name == kRelHead) head = &t;
    if (name == kRelWeights) w = &t;
    if (name == kRelBias) b = &t;
  }
  if (head == nullptr || w == nullptr || b == nullptr || b->size() != 1) {
    throw DataError("checkpoint lacks relevance scorer tensors");
  }
  try {
    return RelevanceScorer(encoder, *head, *w, b->data[0]);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint relevance scorer: ") + e.what());
  }
}

}  // namespace grapeqa
