#include <doctest.h>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <map>

#include "llp/errors.hpp"
#include "llp/graph.hpp"
#include "support.hpp"

using namespace llp;
using llp::testing::graph_from;
using llp::testing::random_graph;
using llp::testing::random_size;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("llp_graph_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

// Hop distance from s to every node; -1 when unreachable.
std::vector<int> bfs(const Graph& g, NodeId s) {
  std::vector<int> d(g.num_nodes(), -1);
  std::deque<NodeId> q{s};
  d[s] = 0;
  while (!q.empty()) {
    const NodeId x = q.front();
    q.pop_front();
    for (NodeId y : g.neighbors(x)) {
      if (d[y] < 0) {
        d[y] = d[x] + 1;
        q.push_back(y);
      }
    }
  }
  return d;
}

}  // namespace

TEST_CASE("load_graph") {
  TempDir dir;
  SUBCASE("triangle") {
    const auto e = dir.write("t.edges", "# triangle\n0 1\n1 2\n\n0 2\n");
    const auto f = dir.write("t.features", "3 2\n1 0\n0 1\n0.5 0.5\n");
    const Graph g = load_graph(e, f);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 3);
    for (NodeId v = 0; v < 3; ++v) CHECK(g.degree(v) == 2);
    CHECK(g.features()(2, 1) == 0.5);
  }
  SUBCASE("reversed duplicate is stored once") {
    const auto e = dir.write("d.edges", "0 1\n1 0\n");
    const auto f = dir.write("d.features", "2 1\n0\n1\n");
    BuildReport report;
    const Graph g = load_graph(e, f, &report);
    CHECK(g.num_edges() == 1);
    CHECK(report.duplicates_dropped == 1);
  }
  SUBCASE("self loops are dropped") {
    const auto e = dir.write("s.edges", "0 0\n0 1\n");
    const auto f = dir.write("s.features", "2 1\n0\n1\n");
    BuildReport report;
    const Graph g = load_graph(e, f, &report);
    CHECK(g.num_edges() == 1);
    CHECK(report.self_loops_dropped == 1);
  }
  SUBCASE("errors carry the line number") {
    const auto f = dir.write("ok.features", "3 1\n0\n1\n2\n");
    auto line_of = [&](const std::string& edges, const fs::path& feats) {
      try {
        load_graph(dir.write("bad.edges", edges), feats);
      } catch (const LoadError& e) {
        return e.line();
      }
      return std::size_t{999};
    };
    CHECK(line_of("0 1\n1 7\n", f) == 2);
    CHECK(line_of("0 1\n1 x\n", f) == 2);
    CHECK(line_of("0 1\n\n1\n", f) == 3);
    CHECK_THROWS_AS(load_graph(dir.write("e.edges", "0 1\n"), dir.write("short.features", "3 1\n0\n1\n")), LoadError);
    CHECK(line_of("0 1\n", dir.write("wide.features", "3 1\n0\n1 2\n2\n")) == 3);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_graph(dir.path / "nope", dir.path / "nope2"), LoadError); }
  SUBCASE("save and load round trip") {
    std::mt19937_64 rng(4);
    const Graph g = random_graph(30, 0.2, 5, rng);
    save_graph(g, dir.path / "r.edges", dir.path / "r.features");
    const Graph h = load_graph(dir.path / "r.edges", dir.path / "r.features");
    CHECK(h.edges() == g.edges());
    CHECK(h.features() == g.features());
  }
}

TEST_CASE("graph structure properties") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_graph(random_size(rng, 1, 40), 0.15, 1, rng);
    std::size_t deg = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v) deg += g.degree(v);
    CHECK(deg == 2 * g.num_edges());
    for (NodeId a = 0; a < g.num_nodes(); ++a) {
      for (NodeId b = 0; b < g.num_nodes(); ++b) CHECK(g.has_edge(a, b) == g.has_edge(b, a));
    }
  }
  CHECK_THROWS_AS(graph_from(3, {{0, 3}}), DimensionError);
}

TEST_CASE("sample_negatives") {
  Rng rng(1);
  SUBCASE("path graph has one non-edge") {
    const Graph g = graph_from(3, {{0, 1}, {1, 2}});
    const EdgeSet neg = sample_negatives(g, 1, {}, rng);
    REQUIRE(neg.size() == 1);
    CHECK(neg[0] == LabeledEdge{0, 2, 0});
  }
  SUBCASE("complete graph has none") {
    const Graph g = graph_from(3, {{0, 1}, {1, 2}, {0, 2}});
    CHECK_THROWS_AS(sample_negatives(g, 1, {}, rng), CapacityError);
  }
  SUBCASE("exclusions are honoured") {
    const Graph g = graph_from(4, {{0, 1}});
    EdgeSet exclude;
    exclude.push(2, 3, 0);
    const EdgeSet neg = sample_negatives(g, 4, exclude, rng);
    CHECK(neg.size() == 4);
    CHECK_FALSE(neg.keys().contains(Edge{2, 3}.key()));
    CHECK_THROWS_AS(sample_negatives(g, 5, exclude, rng), CapacityError);
  }
  SUBCASE("pools") {
    const Graph g = graph_from(6, {{0, 3}});
    const std::vector<NodeId> a{0, 1, 2}, b{3, 4, 5};
    CHECK(negative_capacity(g, {}, a, b) == 8);
    CHECK(negative_capacity(g, {}, a) == 3);
    const EdgeSet neg = sample_negatives(g, 8, {}, rng, a, b);
    for (const auto& e : neg) {
      CHECK(e.u < 3);
      CHECK(e.v >= 3);
    }
  }
  SUBCASE("membership oracle over many draws") {
    std::mt19937_64 gen(77);
    std::size_t hits = 0, drawn = 0;
    for (int i = 0; i < 1000; ++i) {
      const Graph g = random_graph(10, 0.3, 1, gen);
      const std::size_t cap = negative_capacity(g, {}, {});
      const EdgeSet neg = sample_negatives(g, std::min<std::size_t>(cap, 10), {}, rng);
      CHECK_FALSE(neg.has_duplicates());
      for (const auto& e : neg) {
        hits += g.has_edge(e.u, e.v);
        CHECK(e.label == 0);
        ++drawn;
      }
    }
    CHECK(drawn >= 10000);
    CHECK(hits == 0);
  }
  SUBCASE("same seed reproduces the draw") {
    std::mt19937_64 gen(5);
    const Graph g = random_graph(50, 0.1, 1, gen);
    Rng r1(42), r2(42);
    CHECK(sample_negatives(g, 100, {}, r1) == sample_negatives(g, 100, {}, r2));
  }
}

TEST_CASE("random_walk") {
  Rng rng(3);
  SUBCASE("isolated start") {
    const Graph g = graph_from(2, {});
    CHECK(random_walk(g, 0, 5, rng).empty());
  }
  SUBCASE("forced moves") {
    const Graph g = graph_from(2, {{0, 1}});
    CHECK(random_walk(g, 0, 3, rng) == std::vector<NodeId>{1, 0, 1});
  }
  SUBCASE("star leaves are uniform") {
    constexpr NodeId kLeaves = 8;
    std::vector<Edge> edges;
    for (NodeId l = 1; l <= kLeaves; ++l) edges.push_back({0, l});
    const Graph g = graph_from(kLeaves + 1, edges);
    constexpr int kTrials = 10000;
    std::map<NodeId, int> count;
    for (int i = 0; i < kTrials; ++i) ++count[random_walk(g, 0, 1, rng).at(0)];
    const double p = 1.0 / kLeaves, mean = kTrials * p, sigma = std::sqrt(kTrials * p * (1 - p));
    CHECK(count.size() == kLeaves);
    for (auto [leaf, c] : count) {
      INFO("leaf " << leaf << " count " << c);
      CHECK(std::abs(c - mean) <= 3 * sigma);
    }
  }
  SUBCASE("walk stays within length hops and follows edges") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 100; ++trial) {
      const Graph g = random_graph(30, 0.08, 1, gen);
      const NodeId s = static_cast<NodeId>(random_size(gen, 0, 29));
      const std::size_t len = random_size(gen, 0, 6);
      const auto walk = random_walk(g, s, len, rng);
      const auto d = bfs(g, s);
      CHECK(walk.size() <= len);
      NodeId prev = s;
      for (std::size_t i = 0; i < walk.size(); ++i) {
        CHECK(g.has_edge(prev, walk[i]));
        CHECK(d[walk[i]] >= 0);
        CHECK(static_cast<std::size_t>(d[walk[i]]) <= i + 1);
        prev = walk[i];
      }
      if (walk.size() < len) CHECK(g.degree(walk.empty() ? s : walk.back()) == 0);
    }
  }
}
