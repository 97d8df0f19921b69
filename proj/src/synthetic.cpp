#include "grapeqa/synthetic.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

#include "grapeqa/tensor.hpp"

namespace grapeqa {

using nlohmann::json;

namespace {

const std::vector<std::string> kSyllables = {"ba", "ko", "mi", "ru", "te", "sa", "lo", "vi", "da", "ne", "pu", "zo",
                                             "fa", "gi", "ho", "ju", "ke", "ma", "no", "pe", "ri", "su", "ta", "wo"};

/// Shuffled pool of distinct three-syllable words.
class WordPool {
 public:
  explicit WordPool(Rng& rng) {
    const std::size_t n = kSyllables.size();
    for (std::size_t i = 0; i < n * n * n; ++i) {
      words_.push_back(kSyllables[i / (n * n)] + kSyllables[(i / n) % n] + kSyllables[i % n]);
    }
    for (std::size_t i = words_.size(); i > 1; --i) std::swap(words_[i - 1], words_[rng.below(i)]);
  }
  std::string take() {
    if (next_ >= words_.size()) throw std::length_error("synthetic word pool exhausted");
    return words_[next_++];
  }

 private:
  std::vector<std::string> words_;
  std::size_t next_ = 0;
};

const std::vector<std::string> kRelations = {"RelatedTo", "IsA", "AtLocation", "UsedFor"};

std::string triple(const std::string& s, const std::string& r, const std::string& o) {
  return json{{"subj", s}, {"rel", r}, {"obj", o}}.dump() + "\n";
}

void check(const SyntheticOptions& o) {
  if (o.options < kMinOptions || o.options > kMaxOptions) throw std::invalid_argument("option count out of range");
  if (o.train + o.test == 0) throw std::invalid_argument("no examples requested");
}

}  // namespace

SyntheticTask planted_path_task(const SyntheticOptions& opt) {
  check(opt);
  Rng rng(opt.seed);
  WordPool pool(rng);
  SyntheticTask task;
  auto rel = [&] { return kRelations[rng.below(kRelations.size())]; };
  auto edge = [&](const std::string& a, const std::string& b) {
    // random orientation; inverse edges make both directions visible anyway
    task.kg_jsonl += rng.below(2) == 0 ? triple(a, rel(), b) : triple(b, rel(), a);
  };

  for (std::size_t i = 0; i < opt.train + opt.test; ++i) {
    const std::string q1 = pool.take();
    const std::string q2 = pool.take();
    QAExample ex;
    ex.id = "path-" + std::to_string(i);
    ex.question = "which concept links " + q1 + " with " + q2 + " ?";
    ex.gold = static_cast<int>(rng.below(opt.options));
    if (rng.below(2) == 0) edge(q1, q2);
    for (std::size_t o = 0; o < opt.options; ++o) {
      const std::string a = pool.take();
      ex.options.push_back(a);
      if (static_cast<int>(o) == ex.gold) {
        const std::string s1 = pool.take();
        const std::string s2 = pool.take();
        edge(q1, s1);
        edge(s1, a);
        edge(q2, s2);
        edge(s2, a);
      } else {
        // a bridge to at most one question concept, plus an unrelated neighbor
        const std::size_t kind = rng.below(3);
        if (kind > 0) {
          const std::string s = pool.take();
          edge(kind == 1 ? q1 : q2, s);
          edge(s, a);
        }
        edge(a, pool.take());
      }
    }
    (i < opt.train ? task.train : task.test).push_back(std::move(ex));
  }
  return task;
}

SyntheticTask planted_chunk_task(const SyntheticOptions& opt) {
  check(opt);
  Rng rng(opt.seed);
  WordPool pool(rng);
  SyntheticTask task;

  // the KG only exists so the pipeline has something to link against
  std::vector<std::string> filler;
  for (int i = 0; i < 12; ++i) filler.push_back(pool.take());
  for (std::size_t i = 0; i + 1 < filler.size(); ++i) task.kg_jsonl += triple(filler[i], "RelatedTo", filler[i + 1]);

  const std::size_t vocab = 30;
  std::vector<std::string> classes = {pool.take(), pool.take()};
  std::vector<std::vector<std::string>> members(2);
  for (auto& m : members) {
    for (std::size_t k = 0; k < vocab; ++k) m.push_back(pool.take());
  }
  auto tag = [&](const std::string& w, const char* pos) {
    task.lexicon_jsonl += json{{"token", w}, {"pos", pos}}.dump() + "\n";
  };
  tag("some", "DET");
  for (std::size_t c = 0; c < 2; ++c) {
    tag(classes[c], "NOUN");
    for (const auto& w : members[c]) tag(w, "NOUN");
  }

  for (std::size_t i = 0; i < opt.train + opt.test; ++i) {
    const std::size_t c = rng.below(2);
    QAExample ex;
    ex.id = "chunk-" + std::to_string(i);
    ex.question = pool.take() + " asks : which one is some " + classes[c] + " ?";
    ex.gold = static_cast<int>(rng.below(opt.options));
    std::vector<std::size_t> picks;
    const auto& other = members[1 - c];
    while (picks.size() + 1 < opt.options) {
      const std::size_t k = rng.below(other.size());
      if (std::find(picks.begin(), picks.end(), k) == picks.end()) picks.push_back(k);
    }
    std::size_t next = 0;
    for (std::size_t o = 0; o < opt.options; ++o) {
      ex.options.push_back(static_cast<int>(o) == ex.gold ? members[c][rng.below(vocab)] : other[picks[next++]]);
    }
    (i < opt.train ? task.train : task.test).push_back(std::move(ex));
  }
  return task;
}

}  // namespace grapeqa
