#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "grapeqa/qa.hpp"

namespace grapeqa {

struct SyntheticOptions {
  std::size_t train = 500;
  std::size_t test = 100;
  std::size_t options = 4;
  std::uint64_t seed = 0;
};

/// Generated corpus plus the files it would be stored as.
struct SyntheticTask {
  std::string kg_jsonl;
  std::string lexicon_jsonl;  // empty when the task needs no lexicon
  std::vector<QAExample> train;
  std::vector<QAExample> test;
};

/// Gold options are tied to both question concepts through bridge concepts;
/// distractors reach at most one of them. Every example uses fresh concepts,
/// so only graph structure generalizes.
SyntheticTask planted_path_task(const SyntheticOptions& options);

/// Neither questions nor options mention KG concepts. The question asks for a
/// member of one of two word classes and only the gold option belongs to it;
/// the lexicon tags class words as nouns so that noun chunks expose them.
/// Each question carries a unique filler word, so the context text alone is
/// never repeated.
SyntheticTask planted_chunk_task(const SyntheticOptions& options);

}  // namespace grapeqa
