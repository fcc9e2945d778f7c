#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "llp/graph.hpp"
#include "llp/random.hpp"

namespace llp {

/// Positives of one evaluation bucket with an equally sized negative set.
struct LabeledPairs {
  EdgeSet pos;
  EdgeSet neg;
};

/// Random edge hold-out; every node is visible during training.
struct TransductiveSplit {
  std::uint64_t seed = 0;
  double val_frac = 0.05;
  double test_frac = 0.15;
  EdgeSet train_pos;
  LabeledPairs val;
  LabeledPairs test;
  /// Built from train_pos only.
  Graph message_graph;
};

/// New nodes (and their edges) appear only at inference time.
struct ProductionSplit {
  std::uint64_t seed = 0;
  double new_frac = 0.20;
  /// Share of the E-E training portion carved out for validation.
  double val_frac = 0.05;

  std::vector<NodeId> existing_nodes;  // sorted
  std::vector<NodeId> new_nodes;       // sorted

  EdgeSet train_pos;    // E-E, used for supervision and training message passing
  LabeledPairs val;     // E-E only
  EdgeSet ee_message;   // E-E edges that become visible at inference
  EdgeSet en_message;   // E-N edges visible at inference
  EdgeSet nn_message;   // N-N edges visible at inference
  LabeledPairs test_ee;
  LabeledPairs test_en;
  LabeledPairs test_nn;

  Graph train_message_graph;      // train_pos
  Graph inference_message_graph;  // everything except test and validation negatives

  std::vector<std::string> warnings;

  bool is_new(NodeId v) const;
};

/// Production split whose inference graph has every edge touching a new
/// node removed.
struct ColdStartView {
  ProductionSplit split;
  Graph message_graph;
};

using AnySplit = std::variant<TransductiveSplit, ProductionSplit>;

/// Shuffles the edges and holds out floor(val_frac*|E|) validation and
/// floor(test_frac*|E|) test positives, each with an equal number of
/// non-edge negatives. Throws ParameterError unless
/// 0 <= val_frac, test_frac and val_frac + test_frac < 1.
TransductiveSplit transductive_split(const Graph& g, double val_frac, double test_frac, std::uint64_t seed);

/// Samples floor(new_frac*N) new nodes, partitions edges into E-E / E-N / N-N,
/// splits E-E 80/10/10 into train / message / test and E-N, N-N 90/10 into
/// message / test. Validation is floor(val_frac*|train|) E-E training edges.
/// Negatives are drawn within each stratum's node pools.
ProductionSplit production_split(const Graph& g, double new_frac, std::uint64_t seed, double val_frac = 0.05);

ColdStartView cold_start_view(const ProductionSplit& ps);

/// floor(frac * n), robust to representation error in frac.
std::size_t fraction_count(double frac, std::size_t n);

/// Invariant checks; an empty result means the split is sound.
std::vector<std::string> validate_split(const TransductiveSplit& s, const Graph& g);
std::vector<std::string> validate_split(const ProductionSplit& s, const Graph& g);
std::vector<std::string> validate_split(const ColdStartView& v, const Graph& g);

/// Manifest: "key value" header lines, "new_node v" lines, then one
/// "bucket u v label" line per pair. Re-writing a parsed manifest reproduces
/// it byte for byte.
void write_manifest(std::ostream& out, const AnySplit& split);
/// g must be the graph the split was generated from; message graphs are
/// rebuilt from the buckets. Throws LoadError on malformed input.
AnySplit read_manifest(std::istream& in, const Graph& g, const std::string& name = "<manifest>");

}  // namespace llp
