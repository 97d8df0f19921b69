#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "grapeqa/gnn.hpp"
#include "grapeqa/relevance.hpp"

namespace grapeqa {

/// Binary model file.
///
///   "GQA1" | u32 D | u32 L | u32 header bytes | header JSON | float32 payload
///
/// The header lists every tensor name and shape in payload order plus the
/// model config and free-form metadata. All integers and floats are
/// little-endian; values round-trip exactly because parameters are kept at
/// float32 precision.
struct Checkpoint {
  GnnConfig config;
  std::vector<std::pair<std::string, Tensor>> tensors;
  nlohmann::json meta = nlohmann::json::object();
};

Checkpoint make_checkpoint(const GnnModel& model, const RelevanceScorer& scorer, nlohmann::json meta = {});

/// Written to a temporary file first and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);

Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

/// Copies tensors into `model`. Throws DataError listing every missing,
/// unexpected or mis-shaped tensor.
void restore_model(const Checkpoint& ckpt, GnnModel& model);
/// Rebuilds the relevance scorer stored in the checkpoint.
RelevanceScorer restore_scorer(const Checkpoint& ckpt, const EmbeddingProvider& encoder);

}  // namespace grapeqa
