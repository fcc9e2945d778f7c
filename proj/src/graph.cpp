#include "llp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <string_view>

#include "llp/errors.hpp"

namespace llp {

// ---------------------------------------------------------------------------
// EdgeSet

EdgeSet EdgeSet::positives(std::span<const Edge> edges) {
  EdgeSet s;
  s.items_.reserve(edges.size());
  for (const Edge& e : edges) s.push(e.u, e.v, 1);
  return s;
}

void EdgeSet::push(NodeId a, NodeId b, std::uint8_t label) {
  if (a == b) throw ParameterError("edge set cannot hold a self pair");
  if (label > 1) throw ParameterError("edge label must be 0 or 1");
  const Edge e = Edge::canonical(a, b);
  items_.push_back(LabeledEdge{e.u, e.v, label});
}

void EdgeSet::append(const EdgeSet& other) { items_.insert(items_.end(), other.items_.begin(), other.items_.end()); }

std::vector<Edge> EdgeSet::edges() const {
  std::vector<Edge> out;
  out.reserve(items_.size());
  for (const auto& e : items_) out.push_back(e.edge());
  return out;
}

std::unordered_set<std::uint64_t> EdgeSet::keys() const {
  std::unordered_set<std::uint64_t> out;
  out.reserve(items_.size() * 2);
  for (const auto& e : items_) out.insert(e.edge().key());
  return out;
}

bool EdgeSet::has_duplicates() const { return keys().size() != items_.size(); }

bool EdgeSet::in_range(std::size_t num_nodes) const {
  return std::all_of(items_.begin(), items_.end(), [num_nodes](const LabeledEdge& e) {
    return e.u < num_nodes && e.v < num_nodes;
  });
}

// ---------------------------------------------------------------------------
// Graph

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges, std::shared_ptr<const Tensor> features,
                        BuildReport* report) {
  if (num_nodes >= std::numeric_limits<NodeId>::max()) throw DimensionError("too many nodes");
  if (features && features->rows() != num_nodes) {
    throw DimensionError("feature rows (" + std::to_string(features->rows()) + ") != node count (" +
                         std::to_string(num_nodes) + ")");
  }
  BuildReport local;
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) {
      throw DimensionError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") out of range for " +
                           std::to_string(num_nodes) + " nodes");
    }
    if (e.u == e.v) {
      ++local.self_loops_dropped;
      continue;
    }
    canon.push_back(Edge::canonical(e.u, e.v));
  }
  std::sort(canon.begin(), canon.end());
  const auto last = std::unique(canon.begin(), canon.end());
  local.duplicates_dropped = static_cast<std::size_t>(canon.end() - last);
  canon.erase(last, canon.end());

  Graph g;
  g.num_nodes_ = num_nodes;
  g.features_ = features ? std::move(features) : std::make_shared<const Tensor>(num_nodes, 0);
  std::vector<std::uint64_t> deg(num_nodes + 1, 0);
  for (const Edge& e : canon) {
    ++deg[e.u + 1];
    ++deg[e.v + 1];
  }
  for (std::size_t i = 1; i <= num_nodes; ++i) deg[i] += deg[i - 1];
  g.offsets_ = deg;
  g.neighbors_.assign(canon.size() * 2, 0);
  std::vector<std::uint64_t> cursor(deg.begin(), deg.end() - 1);
  for (const Edge& e : canon) {
    g.neighbors_[cursor[e.u]++] = e.v;
    g.neighbors_[cursor[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < num_nodes; ++v) {
    std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
              g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
  }
  if (report) *report = local;
  return g;
}

Graph Graph::with_edges(std::span<const Edge> edges) const { return from_edges(num_nodes_, edges, features_); }

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a >= num_nodes_ || b >= num_nodes_) return false;
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.push_back(Edge{u, v});
    }
  }
  return out;
}

const Tensor& Graph::features() const {
  static const Tensor kEmpty;
  return features_ ? *features_ : kEmpty;
}

// ---------------------------------------------------------------------------
// File IO

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits on spaces/tabs.
template <class F>
void for_each_token(std::string_view line, F&& f) {
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) f(line.substr(i, j - i));
    i = j;
  }
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && p == end;
}

std::shared_ptr<const Tensor> load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string(), 0, "cannot open feature file");
  std::string line;
  std::size_t lineno = 0;
  std::size_t n = 0, f = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string_view> toks;
    for_each_token(t, [&](std::string_view tok) { toks.push_back(tok); });
    if (toks.size() != 2 || !parse_number(toks[0], n) || !parse_number(toks[1], f)) {
      throw LoadError(path.string(), lineno, "expected header \"N F\"");
    }
    have_header = true;
  }
  if (!have_header) throw LoadError(path.string(), lineno, "missing header");
  auto x = std::make_shared<Tensor>(n, f);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (row >= n) throw LoadError(path.string(), lineno, "more feature rows than the header's N");
    std::size_t col = 0;
    bool bad = false;
    for_each_token(t, [&](std::string_view tok) {
      if (bad) return;
      if (col >= f || !parse_number(tok, (*x)(row, col))) {
        bad = true;
        return;
      }
      ++col;
    });
    if (bad || col != f) {
      throw LoadError(path.string(), lineno, "expected " + std::to_string(f) + " reals on feature row " +
                                                 std::to_string(row));
    }
    ++row;
  }
  if (row != n) {
    throw LoadError(path.string(), lineno, "feature count mismatch: header says " + std::to_string(n) + " rows, found " +
                                               std::to_string(row));
  }
  if (!x->all_finite()) throw LoadError(path.string(), 0, "non-finite feature value");
  return x;
}

}  // namespace

Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 BuildReport* report) {
  std::ifstream in(edge_path);
  if (!in) throw LoadError(edge_path.string(), 0, "cannot open edge file");
  auto features = load_features(feature_path);
  const std::size_t n = features->rows();
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string_view> toks;
    for_each_token(t, [&](std::string_view tok) { toks.push_back(tok); });
    std::uint64_t a = 0, b = 0;
    if (toks.size() != 2 || !parse_number(toks[0], a) || !parse_number(toks[1], b)) {
      throw LoadError(edge_path.string(), lineno, "malformed edge line");
    }
    if (a >= n || b >= n) {
      throw LoadError(edge_path.string(), lineno, "node index out of range (N = " + std::to_string(n) + ")");
    }
    edges.push_back(Edge{static_cast<NodeId>(a), static_cast<NodeId>(b)});
  }
  BuildReport local;
  Graph g = Graph::from_edges(n, edges, std::move(features), &local);
  if (local.self_loops_dropped > 0) {
    std::cerr << "warning: " << edge_path.string() << ": dropped " << local.self_loops_dropped << " self-loop(s)\n";
  }
  if (report) *report = local;
  return g;
}

void save_graph(const Graph& g, const std::filesystem::path& edge_path, const std::filesystem::path& feature_path) {
  {
    std::ofstream out(edge_path);
    if (!out) throw LoadError(edge_path.string(), 0, "cannot write edge file");
    for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
  }
  std::ofstream out(feature_path);
  if (!out) throw LoadError(feature_path.string(), 0, "cannot write feature file");
  const Tensor& x = g.features();
  out << x.rows() << ' ' << x.cols() << '\n';
  char buf[64];
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x(r, c));
      if (c) out << ' ';
      out.write(buf, p - buf);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

// Candidate space for negative sampling.
struct PairSpace {
  std::vector<NodeId> a;
  std::vector<NodeId> b;  // empty: pairs within a
  std::vector<std::uint8_t> side;  // 1 = a, 2 = b, 0 = outside

  bool within() const { return b.empty(); }

  std::size_t candidates() const {
    if (within()) return a.size() < 2 ? 0 : a.size() * (a.size() - 1) / 2;
    return a.size() * b.size();
  }

  bool contains(Edge e) const {
    if (within()) return side[e.u] == 1 && side[e.v] == 1;
    return (side[e.u] == 1 && side[e.v] == 2) || (side[e.u] == 2 && side[e.v] == 1);
  }
};

PairSpace make_space(const Graph& g, std::span<const NodeId> pool_a, std::span<const NodeId> pool_b) {
  PairSpace s;
  s.side.assign(g.num_nodes(), 0);
  if (pool_a.empty()) {
    if (!pool_b.empty()) throw ParameterError("pool_b given without pool_a");
    s.a.resize(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) s.a[v] = v;
  } else {
    s.a.assign(pool_a.begin(), pool_a.end());
  }
  s.b.assign(pool_b.begin(), pool_b.end());
  for (NodeId v : s.a) {
    if (v >= g.num_nodes()) throw ParameterError("pool node out of range");
    if (s.side[v] != 0) throw ParameterError("duplicate node in negative-sampling pool");
    s.side[v] = 1;
  }
  for (NodeId v : s.b) {
    if (v >= g.num_nodes()) throw ParameterError("pool node out of range");
    if (s.side[v] != 0) throw ParameterError("negative-sampling pools must be disjoint");
    s.side[v] = 2;
  }
  return s;
}

std::size_t capacity_in(const Graph& g, const PairSpace& space, const std::unordered_set<std::uint64_t>& excluded) {
  std::size_t edges_in = 0;
  for (const Edge& e : g.edges()) edges_in += space.contains(e) ? 1 : 0;
  std::size_t excluded_in = 0;
  for (std::uint64_t k : excluded) {
    const Edge e{static_cast<NodeId>(k >> 32), static_cast<NodeId>(k & 0xffffffffu)};
    if (e.u < g.num_nodes() && e.v < g.num_nodes() && space.contains(e) && !g.has_edge(e.u, e.v)) ++excluded_in;
  }
  return space.candidates() - edges_in - excluded_in;
}

}  // namespace

std::size_t negative_capacity(const Graph& g, const EdgeSet& exclude, std::span<const NodeId> pool_a,
                              std::span<const NodeId> pool_b) {
  const PairSpace space = make_space(g, pool_a, pool_b);
  return capacity_in(g, space, exclude.keys());
}

EdgeSet sample_negatives(const Graph& g, std::size_t m, const EdgeSet& exclude, Rng& rng,
                         std::span<const NodeId> pool_a, std::span<const NodeId> pool_b) {
  EdgeSet out;
  if (m == 0) return out;
  const PairSpace space = make_space(g, pool_a, pool_b);
  const auto excluded = exclude.keys();
  const std::size_t capacity = capacity_in(g, space, excluded);
  if (m > capacity) {
    throw CapacityError("requested " + std::to_string(m) + " negatives but only " + std::to_string(capacity) +
                        " candidate pairs exist");
  }

  const bool sparse_enough = capacity >= 4 * m && 4 * capacity >= space.candidates();
  if (sparse_enough) {
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(m * 2);
    std::uniform_int_distribution<std::size_t> pick_a(0, space.a.size() - 1);
    const auto& other = space.within() ? space.a : space.b;
    std::uniform_int_distribution<std::size_t> pick_b(0, other.size() - 1);
    while (out.size() < m) {
      const NodeId x = space.a[pick_a(rng)];
      const NodeId y = other[pick_b(rng)];
      if (x == y) continue;
      const Edge e = Edge::canonical(x, y);
      const auto key = e.key();
      if (g.has_edge(e.u, e.v) || excluded.count(key) || taken.count(key)) continue;
      taken.insert(key);
      out.push(e.u, e.v, 0);
    }
    return out;
  }

  // Dense or nearly exhausted candidate space: enumerate, then draw without
  // replacement with a partial Fisher-Yates shuffle.
  std::vector<Edge> pool;
  pool.reserve(capacity);
  auto consider = [&](NodeId x, NodeId y) {
    const Edge e = Edge::canonical(x, y);
    if (!g.has_edge(e.u, e.v) && !excluded.count(e.key())) pool.push_back(e);
  };
  if (space.within()) {
    for (std::size_t i = 0; i < space.a.size(); ++i)
      for (std::size_t j = i + 1; j < space.a.size(); ++j) consider(space.a[i], space.a[j]);
  } else {
    for (NodeId x : space.a)
      for (NodeId y : space.b) consider(x, y);
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push(pool[i].u, pool[i].v, 0);
  }
  return out;
}

std::vector<NodeId> random_walk(const Graph& g, NodeId start, std::size_t length, Rng& rng) {
  if (start >= g.num_nodes()) throw ParameterError("random_walk: start node out of range");
  std::vector<NodeId> walk;
  walk.reserve(length);
  NodeId cur = start;
  for (std::size_t step = 0; step < length; ++step) {
    const auto nb = g.neighbors(cur);
    if (nb.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
    cur = nb[pick(rng)];
    walk.push_back(cur);
  }
  return walk;
}

}  // namespace llp
