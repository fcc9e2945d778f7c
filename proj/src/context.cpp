#include "llp/context.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "llp/errors.hpp"

namespace llp {

std::vector<NodeId> ContextSet::nodes() const {
  std::vector<NodeId> out = nearby;
  std::unordered_set<NodeId> seen(nearby.begin(), nearby.end());
  for (NodeId r : random) {
    if (seen.insert(r).second) out.push_back(r);
  }
  return out;
}

ContextSet sample_context(const Graph& g, NodeId v, std::size_t walk_len, std::size_t num_walks, std::size_t q,
                          Rng& rng) {
  const std::size_t n = g.num_nodes();
  if (v >= n) throw ParameterError("sample_context: anchor out of range");
  ContextSet c;
  c.anchor = v;

  std::unordered_set<NodeId> seen{v};
  for (std::size_t w = 0; w < num_walks; ++w) {
    for (NodeId x : random_walk(g, v, walk_len, rng)) {
      if (seen.insert(x).second) c.nearby.push_back(x);
    }
  }

  const std::size_t others = n - 1;
  if (q >= others) {
    for (NodeId x = 0; x < n; ++x) {
      if (x != v) c.random.push_back(x);
    }
    return c;
  }
  std::unordered_set<NodeId> drawn;
  // Draw from [0, n-1) and skip over the anchor, so no rejection on v.
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(others - 1));
  while (c.random.size() < q) {
    NodeId x = pick(rng);
    if (x >= v) ++x;
    if (drawn.insert(x).second) c.random.push_back(x);
  }
  return c;
}

void ContextBatch::add(const ContextSet& c) {
  for (NodeId x : c.nodes()) {
    anchor.push_back(c.anchor);
    node.push_back(x);
  }
  offsets.push_back(node.size());
}

}  // namespace llp
