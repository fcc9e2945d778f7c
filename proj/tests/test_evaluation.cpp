#include <doctest.h>

#include <cmath>
#include <sstream>

#include "llp/errors.hpp"
#include "llp/evaluation.hpp"
#include "llp/kernels.hpp"
#include "llp/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace llp;
using namespace llp::testing;

TEST_CASE("hits@k examples") {
  CHECK(hits_at_k({{0.9, 0.8}, {0.1, 0.2}}, 1) == 1.0);
  CHECK(hits_at_k({{0.1, 0.2}, {0.8, 0.9}}, 2) == 0.0);
  CHECK(hits_at_k({{0.9, 0.4}, {0.8, 0.5, 0.3}}, 2) == 0.5);
  CHECK(hits_at_k({{0.1}, {0.8, 0.9}}, 3) == 1.0);
  CHECK(hits_at_k({{0.5}, {0.5}}, 1) == 0.0);
  CHECK_THROWS_AS(hits_at_k({{}, {0.1}}, 1), MetricError);
  CHECK_THROWS_AS(hits_at_k({{0.1}, {}}, 1), MetricError);
  CHECK_THROWS_AS(hits_at_k({{0.1}, {0.2}}, 0), MetricError);
  CHECK_THROWS_AS(hits_at_k({{NAN}, {0.2}}, 1), MetricError);
}

TEST_CASE("auc examples") {
  CHECK(auc({{0.9, 0.8}, {0.1, 0.2}}) == 1.0);
  CHECK(auc({{0.3, 0.3}, {0.3, 0.3, 0.3}}) == 0.5);
  CHECK(auc({{0.1}, {0.9}}) == 0.0);
  CHECK_THROWS_AS(auc({{}, {0.1}}), MetricError);
  CHECK_THROWS_AS(auc({{0.1}, {}}), MetricError);
}

TEST_CASE("metrics match brute-force oracles") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const ScoreSet s = random_scores(rng);
    CHECK(std::abs(auc(s) - auc_oracle(s)) <= 1e-12);
    double prev = 0.0;
    for (std::size_t k : {std::size_t{1}, random_size(rng, 1, 250), std::size_t{20}, std::size_t{50}, s.neg.size(),
                          s.neg.size() + 1}) {
      CHECK(std::abs(hits_at_k(s, k) - hits_oracle(s, k)) <= 1e-12);
    }
    for (std::size_t k = 1; k <= s.neg.size() + 1; ++k) {
      const double h = hits_at_k(s, k);
      CHECK(h >= prev);
      prev = h;
    }
  }
}

TEST_CASE("evaluation reports") {
  SbmConfig c;
  c.features = 6;
  const Graph g = make_sbm(c);
  const TeacherModel t = TeacherModel::init(6, 8, 2, 3);
  const StudentModel s = StudentModel::init(6, 8, 2, 3);
  const std::vector<std::size_t> ks{20, 50};

  SUBCASE("transductive has a single overall stratum") {
    const auto split = transductive_split(g, 0.05, 0.15, 1);
    const MetricsReport r = evaluate_split(t, eval_target(split), ks);
    CHECK(r.strata == std::vector<std::string>{"overall"});
    CHECK(r.values.at("overall").num_pos == split.test.pos.size());
    CHECK(r.values.at("overall").hits.size() == 2);
  }
  SUBCASE("production has overall and three strata") {
    const auto split = production_split(g, 0.2, 1);
    const MetricsReport r = evaluate_split(t, eval_target(split), ks);
    CHECK(r.strata == std::vector<std::string>{"overall", "EE", "EN", "NN"});
    const std::size_t parts = r.values.at("EE").num_pos + r.values.at("EN").num_pos + r.values.at("NN").num_pos;
    CHECK(r.values.at("overall").num_pos == parts);
  }
  SUBCASE("student report ignores the cold-start edit") {
    const auto split = production_split(g, 0.2, 2);
    const MetricsReport a = evaluate_split(s, eval_target(split), ks);
    const MetricsReport b = evaluate_split(s, eval_target(cold_start_view(split)), ks);
    for (const auto& name : a.strata) {
      CHECK(a.values.at(name).hits == b.values.at(name).hits);
      CHECK(a.values.at(name).auc == b.values.at(name).auc);
    }
  }
  SUBCASE("empty strata are absent") {
    // Ring of 20 nodes with four new ones: the N-N stratum exists only when
    // two new nodes happen to be adjacent.
    auto x = std::make_shared<Tensor>(20, 6, 0.5);
    std::vector<Edge> edges;
    for (NodeId u = 0; u < 20; ++u) edges.push_back(Edge::canonical(u, (u + 1) % 20));
    const Graph dense = Graph::from_edges(20, edges, x);
    bool saw_absent = false;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const ProductionSplit split = production_split(dense, 0.2, seed);
      const MetricsReport r = evaluate_split(s, eval_target(split), ks);
      CHECK(r.values.contains("NN") == !split.test_nn.pos.empty());
      saw_absent = saw_absent || !r.values.contains("NN");
    }
    CHECK(saw_absent);
  }
}

TEST_CASE("metrics table aggregates raw per-seed values") {
  MetricsTable table;
  const double vals[] = {0.5, 0.7, 0.6};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    MetricsReport r;
    r.strata = {"overall"};
    r.values["overall"].hits[20] = vals[seed];
    r.values["overall"].auc = 0.9;
    table.add(seed, r);
  }
  const auto s = table.summary("hits@20", "overall");
  CHECK(s.values == std::vector<double>{0.5, 0.7, 0.6});
  CHECK(s.mean == doctest::Approx(0.6));
  CHECK(s.std == doctest::Approx(0.1));
  CHECK(table.summary("auc", "overall").std == 0.0);
  CHECK_FALSE(table.has("hits@20", "EE"));
  CHECK_THROWS_AS(table.summary("hits@20", "EE"), MetricError);

  std::ostringstream out;
  table.write_kv(out);
  CHECK(out.str().find("hits@20.overall.1 = 70.00\n") != std::string::npos);
  CHECK(out.str().find("hits@20.overall.mean = 60.00\n") != std::string::npos);
  CHECK(out.str().find("hits@20.overall.std = 10.00\n") != std::string::npos);
  CHECK(format_percent(0.12345) == "12.35");
}

TEST_CASE("latency benchmark") {
  SbmConfig c;
  c.nodes = 3000;
  c.avg_degree = 10;
  c.features = 32;
  const Graph g = make_sbm(c);
  const TeacherModel t = TeacherModel::init(32, 32, 2, 1);
  const StudentModel s = StudentModel::init(32, 32, 2, 1);
  BenchSpec spec;
  spec.pairs = 200;
  spec.repetitions = 10;
  const int threads = kernels::num_threads();
  const LatencyReport r = bench_inference(t, s, g, spec);
  CHECK(kernels::num_threads() == threads);
  CHECK(r.teacher_seconds.size() == 10);
  CHECK(r.student_seconds.size() == 10);
  CHECK(r.teacher_median == median(r.teacher_seconds));
  CHECK(r.speedup == doctest::Approx(r.teacher_median / r.student_median));
  CHECK(r.speedup > 1.0);

  SUBCASE("student latency does not depend on the edge count") {
    const LatencyReport sparse = bench_inference(t, s, g.with_edges({}), spec);
    const double ratio = sparse.student_median / r.student_median;
    INFO("student median ratio " << ratio);
    CHECK(ratio > 1.0 / 3.0);
    CHECK(ratio < 3.0);
  }
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
