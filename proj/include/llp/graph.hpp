#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "llp/kernels.hpp"
#include "llp/random.hpp"
#include "llp/tensor.hpp"

namespace llp {

using NodeId = std::uint32_t;

/// Undirected pair in canonical order (u < v).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  static Edge canonical(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  std::uint64_t key() const noexcept { return (static_cast<std::uint64_t>(u) << 32) | v; }
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct LabeledEdge {
  NodeId u = 0;
  NodeId v = 0;
  std::uint8_t label = 0;

  Edge edge() const noexcept { return Edge{u, v}; }
  friend bool operator==(const LabeledEdge&, const LabeledEdge&) = default;
};

/// List of canonical pairs with 0/1 labels. Insertion order is preserved.
class EdgeSet {
 public:
  EdgeSet() = default;

  static EdgeSet positives(std::span<const Edge> edges);

  /// Appends (min(a,b), max(a,b), label). Self pairs are rejected.
  void push(NodeId a, NodeId b, std::uint8_t label);
  void append(const EdgeSet& other);

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const LabeledEdge& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }
  const std::vector<LabeledEdge>& items() const noexcept { return items_; }

  std::vector<Edge> edges() const;
  std::unordered_set<std::uint64_t> keys() const;
  bool has_duplicates() const;
  /// True when every endpoint is < num_nodes.
  bool in_range(std::size_t num_nodes) const;

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  std::vector<LabeledEdge> items_;
};

/// Counts of input anomalies repaired while building a graph.
struct BuildReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

/// Immutable simple undirected graph in CSR form with a dense feature matrix.
/// Features are shared between graphs derived from one another (message
/// graphs over the same node set), never copied.
class Graph {
 public:
  Graph() = default;

  /// Canonicalizes, drops self-loops and duplicate pairs (reported through
  /// report), and builds symmetric sorted CSR. Throws DimensionError if an
  /// endpoint is >= num_nodes or the feature row count differs from
  /// num_nodes.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges, std::shared_ptr<const Tensor> features,
                          BuildReport* report = nullptr);

  /// Same nodes and features, different edge set.
  Graph with_edges(std::span<const Edge> edges) const;

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }
  std::size_t num_features() const noexcept { return features_ ? features_->cols() : 0; }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbors_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  bool has_edge(NodeId a, NodeId b) const;

  /// Canonical edge list, sorted by (u, v).
  std::vector<Edge> edges() const;

  const Tensor& features() const;
  std::shared_ptr<const Tensor> shared_features() const noexcept { return features_; }

  kernels::CsrView csr() const noexcept { return {offsets_, neighbors_}; }
  std::span<const std::uint64_t> offsets() const noexcept { return offsets_; }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::shared_ptr<const Tensor> features_;
};

/// Reads "u v" edge lines ('#' comments, blank lines ignored) and a feature
/// file ("N F" header, then N rows of F reals). Self-loops are dropped with a
/// warning on stderr. Throws LoadError carrying the offending line number.
Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 BuildReport* report = nullptr);

/// Writes the two files read by load_graph. Reals use round-trip precision.
void save_graph(const Graph& g, const std::filesystem::path& edge_path, const std::filesystem::path& feature_path);

/// Draws m distinct label-0 pairs that are neither edges of g nor in exclude.
///
/// Candidate pairs are restricted to pool_a x pool_b; an empty pool_a means
/// all nodes and an empty pool_b means "within pool_a". Two non-empty pools
/// must be disjoint. Rejection sampling against a hash set of edges, with an
/// exhaustive fallback when the request is close to the number of
/// candidates. Throws CapacityError when m exceeds the candidate count.
EdgeSet sample_negatives(const Graph& g, std::size_t m, const EdgeSet& exclude, Rng& rng,
                         std::span<const NodeId> pool_a = {}, std::span<const NodeId> pool_b = {});

/// Number of candidate negatives sample_negatives could return.
std::size_t negative_capacity(const Graph& g, const EdgeSet& exclude, std::span<const NodeId> pool_a = {},
                              std::span<const NodeId> pool_b = {});

/// Uniform random walk of up to length steps from start (start excluded).
/// Stops early at a node without neighbors.
std::vector<NodeId> random_walk(const Graph& g, NodeId start, std::size_t length, Rng& rng);

}  // namespace llp
