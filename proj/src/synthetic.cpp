#include "llp/synthetic.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "llp/errors.hpp"

namespace llp {

std::vector<std::uint32_t> sbm_blocks(const SbmConfig& cfg) {
  std::vector<std::uint32_t> b(cfg.nodes);
  for (std::size_t v = 0; v < cfg.nodes; ++v) b[v] = static_cast<std::uint32_t>(v % cfg.blocks);
  return b;
}

Graph make_sbm(const SbmConfig& cfg) {
  if (cfg.nodes < 2 || cfg.blocks == 0 || cfg.blocks > cfg.nodes) throw ParameterError("sbm: bad node/block counts");
  if (!(cfg.p_within >= 0.0 && cfg.p_within <= 1.0)) throw ParameterError("sbm: p_within must be in [0, 1]");
  if (!(cfg.avg_degree >= 0.0) || cfg.features == 0) throw ParameterError("sbm: bad degree or feature width");
  Rng rng = make_rng(cfg.seed, Stream::kSynthetic);
  const std::size_t n = cfg.nodes;
  const std::size_t members = n / cfg.blocks;  // full rounds of v % blocks

  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  std::bernoulli_distribution within(cfg.p_within);
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.avg_degree / 2.0));
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t u = any(rng);
    std::size_t v = 0;
    if (within(rng)) {
      // Same residue class modulo blocks; members (+1 for low residues).
      const std::size_t b = u % cfg.blocks;
      const std::size_t count = members + (b < n % cfg.blocks ? 1 : 0);
      std::uniform_int_distribution<std::size_t> pick(0, count - 1);
      v = b + pick(rng) * cfg.blocks;
    } else {
      v = any(rng);
    }
    if (u != v) edges.push_back(Edge::canonical(static_cast<NodeId>(u), static_cast<NodeId>(v)));
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor centroids(cfg.blocks, cfg.features);
  for (double& c : centroids.values()) c = gauss(rng);
  auto x = std::make_shared<Tensor>(n, cfg.features);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t b = v % cfg.blocks;
    for (std::size_t f = 0; f < cfg.features; ++f) {
      (*x)(v, f) = cfg.signal * centroids(b, f) + cfg.noise * gauss(rng);
    }
  }
  return Graph::from_edges(n, edges, std::move(x));
}

}  // namespace llp
