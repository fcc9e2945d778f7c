#pragma once

// Context sets for relational distillation: nodes reached by short random
// walks from an anchor, plus uniformly drawn nodes from the whole graph.

#include <cstddef>
#include <span>
#include <vector>

#include "llp/graph.hpp"
#include "llp/random.hpp"

namespace llp {

struct ContextConfig {
  std::size_t num_walks = 3;
  std::size_t walk_len = 3;
  /// Uniform samples per anchor.
  std::size_t q = 180;

  std::size_t nearby_target() const noexcept { return num_walks * walk_len; }
};

struct ContextSet {
  NodeId anchor = 0;
  /// Distinct walk visits in first-visit order, anchor removed.
  std::vector<NodeId> nearby;
  /// Distinct uniform draws, anchor removed.
  std::vector<NodeId> random;

  /// nearby followed by the random nodes not already in nearby.
  std::vector<NodeId> nodes() const;
};

/// Throws ParameterError when v is out of range. When q >= N - 1 every other
/// node is taken as a random sample.
ContextSet sample_context(const Graph& g, NodeId v, std::size_t walk_len, std::size_t num_walks, std::size_t q,
                          Rng& rng);

inline ContextSet sample_context(const Graph& g, NodeId v, const ContextConfig& cfg, Rng& rng) {
  return sample_context(g, v, cfg.walk_len, cfg.num_walks, cfg.q, rng);
}

/// Flattened contexts of several anchors: anchor a owns
/// pairs [offsets[a], offsets[a+1]) of (anchor, context node).
struct ContextBatch {
  std::vector<NodeId> anchor;
  std::vector<NodeId> node;
  std::vector<std::size_t> offsets{0};

  std::size_t num_anchors() const noexcept { return offsets.size() - 1; }
  std::size_t num_pairs() const noexcept { return node.size(); }
  void add(const ContextSet& c);
};

}  // namespace llp
