#pragma once

// Stochastic block model graphs with block-dependent Gaussian features, used
// as offline test data.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "llp/graph.hpp"

namespace llp {

struct SbmConfig {
  std::size_t nodes = 200;
  std::size_t blocks = 4;
  /// Target mean degree before duplicate removal.
  double avg_degree = 10.0;
  /// Probability that an edge stays inside its source node's block.
  double p_within = 0.9;
  std::size_t features = 32;
  /// Scale of the per-block feature centroid.
  double signal = 1.0;
  /// Standard deviation of the per-node feature noise.
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Node v belongs to block v % blocks. Features are
/// signal * centroid[block] + noise * N(0, 1).
Graph make_sbm(const SbmConfig& cfg);

std::vector<std::uint32_t> sbm_blocks(const SbmConfig& cfg);

}  // namespace llp
