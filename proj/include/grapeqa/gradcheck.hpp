#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace grapeqa {

struct GradcheckOptions {
  std::size_t dim = 8;
  std::size_t layers = 2;
  double step = 1e-5;
  std::uint64_t seed = 0;
};

struct GradcheckResult {
  std::size_t checked = 0;        // scalar entries compared
  std::size_t graph_nodes = 0;    // nodes in the scored working graph
  double max_rel_error = 0.0;     // |a - n| / max(|a|, |n|, 1e-6)
  std::string worst;              // "param[index]" of the worst entry
};

/// Central finite differences of the option loss against reverse-mode
/// gradients for every model parameter entry. The graph passes through the
/// whole pipeline (linking, extraction, relevance, noun chunks) and holds one
/// node of each kind plus a second question entity.
GradcheckResult gradient_check(const GradcheckOptions& options);

}  // namespace grapeqa
