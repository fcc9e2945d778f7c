#include "llp/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "llp/errors.hpp"

namespace llp {

namespace {

void check_scores(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw MetricError(std::string(what) + " scores are empty");
  for (double x : v) {
    if (!std::isfinite(x)) throw MetricError(std::string(what) + " scores contain a non-finite value");
  }
}

}  // namespace

double hits_at_k(const ScoreSet& s, std::size_t k) {
  if (k == 0) throw MetricError("hits@k needs k >= 1");
  check_scores(s.pos, "positive");
  check_scores(s.neg, "negative");
  if (k > s.neg.size()) return 1.0;
  std::vector<double> neg = s.neg;
  std::nth_element(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(k - 1), neg.end(), std::greater<>());
  const double threshold = neg[k - 1];
  const auto above = std::count_if(s.pos.begin(), s.pos.end(), [threshold](double x) { return x > threshold; });
  return static_cast<double>(above) / static_cast<double>(s.pos.size());
}

double auc(const ScoreSet& s) {
  check_scores(s.pos, "positive");
  check_scores(s.neg, "negative");
  std::vector<double> neg = s.neg;
  std::sort(neg.begin(), neg.end());
  // Twice the win count keeps every partial sum an exact integer.
  double twice_wins = 0.0;
  for (double p : s.pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    twice_wins += 2.0 * static_cast<double>(lo - neg.begin()) + static_cast<double>(hi - lo);
  }
  return twice_wins / (2.0 * static_cast<double>(s.pos.size()) * static_cast<double>(neg.size()));
}

// ---------------------------------------------------------------------------
// Split evaluation

EvalTarget eval_target(const TransductiveSplit& s) { return {&s.message_graph, {{"overall", &s.test}}}; }

namespace {
EvalTarget production_target(const ProductionSplit& s, const Graph* graph) {
  return {graph, {{"EE", &s.test_ee}, {"EN", &s.test_en}, {"NN", &s.test_nn}}};
}
}  // namespace

EvalTarget eval_target(const ProductionSplit& s) { return production_target(s, &s.inference_message_graph); }
EvalTarget eval_target(const ColdStartView& v) { return production_target(v.split, &v.message_graph); }

MetricsReport evaluate_embeddings(const DecoderParams& decoder, const Tensor& embeddings, const EvalTarget& target,
                                  const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw MetricError("no hits@k cut-offs configured");
  MetricsReport report;
  auto add = [&](const std::string& name, const ScoreSet& scores) {
    if (scores.pos.empty() || scores.neg.empty()) return;
    StratumMetrics m;
    for (std::size_t k : ks) m.hits[k] = hits_at_k(scores, k);
    m.auc = auc(scores);
    m.num_pos = scores.pos.size();
    m.num_neg = scores.neg.size();
    report.strata.push_back(name);
    report.values[name] = std::move(m);
  };

  std::vector<std::pair<std::string, ScoreSet>> per;
  for (const auto& [name, pairs] : target.strata) {
    per.emplace_back(name, ScoreSet{score_pairs(decoder, embeddings, pairs->pos),
                                    score_pairs(decoder, embeddings, pairs->neg)});
  }
  if (per.size() == 1) {
    add(per.front().first, per.front().second);
    return report;
  }
  ScoreSet overall;
  for (const auto& [name, s] : per) {
    overall.pos.insert(overall.pos.end(), s.pos.begin(), s.pos.end());
    overall.neg.insert(overall.neg.end(), s.neg.begin(), s.neg.end());
  }
  add("overall", overall);
  for (const auto& [name, s] : per) add(name, s);
  return report;
}

MetricsReport evaluate_split(const TeacherModel& m, const EvalTarget& target, const std::vector<std::size_t>& ks) {
  return evaluate_embeddings(m.decoder, sage_embed(m.encoder, *target.message_graph), target, ks);
}

MetricsReport evaluate_split(const StudentModel& m, const EvalTarget& target, const std::vector<std::size_t>& ks) {
  return evaluate_embeddings(m.decoder, mlp_embed(m.encoder, target.message_graph->features()), target, ks);
}

// ---------------------------------------------------------------------------
// Aggregation over seeds

std::string format_percent(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

void MetricsTable::add(std::uint64_t seed, const MetricsReport& report) {
  const std::size_t slot = seeds_.size();
  seeds_.push_back(seed);
  for (auto& [key, vals] : values_) vals.push_back(NAN);
  auto put = [&](const std::string& metric, const std::string& stratum, double v) {
    if (std::find(metrics_.begin(), metrics_.end(), metric) == metrics_.end()) metrics_.push_back(metric);
    if (std::find(strata_.begin(), strata_.end(), stratum) == strata_.end()) strata_.push_back(stratum);
    auto& vals = values_[{metric, stratum}];
    vals.resize(seeds_.size(), NAN);
    vals[slot] = v;
  };
  for (const auto& stratum : report.strata) {
    const StratumMetrics& m = report.values.at(stratum);
    for (const auto& [k, h] : m.hits) put("hits@" + std::to_string(k), stratum, h);
    put("auc", stratum, m.auc);
  }
}

std::vector<std::string> MetricsTable::metric_names() const { return metrics_; }

bool MetricsTable::has(const std::string& metric, const std::string& stratum) const {
  return values_.count({metric, stratum}) > 0;
}

MetricsTable::Summary MetricsTable::summary(const std::string& metric, const std::string& stratum) const {
  auto it = values_.find({metric, stratum});
  if (it == values_.end()) throw MetricError("no values for " + metric + "." + stratum);
  Summary s;
  for (double v : it->second) {
    if (!std::isnan(v)) s.values.push_back(v);
  }
  if (s.values.empty()) throw MetricError("no values for " + metric + "." + stratum);
  double sum = 0.0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(s.values.size());
  if (s.values.size() > 1) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.values.size() - 1));
  }
  return s;
}

void MetricsTable::write_kv(std::ostream& out) const {
  for (const auto& metric : metrics_) {
    for (const auto& stratum : strata_) {
      auto it = values_.find({metric, stratum});
      if (it == values_.end()) continue;
      for (std::size_t i = 0; i < seeds_.size(); ++i) {
        if (std::isnan(it->second[i])) continue;
        out << metric << '.' << stratum << '.' << seeds_[i] << " = " << format_percent(it->second[i]) << '\n';
      }
      const Summary s = summary(metric, stratum);
      out << metric << '.' << stratum << ".mean = " << format_percent(s.mean) << '\n';
      out << metric << '.' << stratum << ".std = " << format_percent(s.std) << '\n';
    }
  }
}

void MetricsTable::write_table(std::ostream& out, const std::string& title) const {
  out << title << " (" << seeds_.size() << " seed" << (seeds_.size() == 1 ? "" : "s") << ")\n";
  out << std::left << std::setw(10) << "stratum";
  for (const auto& m : metrics_) out << std::right << std::setw(18) << m;
  out << '\n';
  for (const auto& stratum : strata_) {
    out << std::left << std::setw(10) << stratum;
    for (const auto& m : metrics_) {
      std::string cell = "-";
      if (has(m, stratum)) {
        const Summary s = summary(m, stratum);
        cell = format_percent(s.mean) + " +- " + format_percent(s.std);
      }
      out << std::right << std::setw(18) << cell;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Latency

double median(std::vector<double> v) {
  if (v.empty()) throw MetricError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void LatencyReport::write_kv(std::ostream& out) const {
  char buf[64];
  auto real = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  out << "bench.num_nodes = " << num_nodes << '\n';
  out << "bench.num_edges = " << num_edges << '\n';
  out << "bench.pairs = " << pairs << '\n';
  out << "bench.repetitions = " << teacher_seconds.size() << '\n';
  out << "bench.teacher.median_seconds = " << real(teacher_median) << '\n';
  out << "bench.student.median_seconds = " << real(student_median) << '\n';
  out << "bench.speedup = " << real(speedup) << '\n';
}

namespace {

// Unique endpoints of the pairs plus local indices into that list.
struct PairBatch {
  std::vector<NodeId> nodes;
  std::vector<std::uint32_t> u, v;
};

PairBatch localize(const std::vector<NodeId>& a, const std::vector<NodeId>& b, std::vector<std::uint32_t>& scratch) {
  PairBatch batch;
  auto local = [&](NodeId x) {
    if (scratch[x] == 0xffffffffu) {
      scratch[x] = static_cast<std::uint32_t>(batch.nodes.size());
      batch.nodes.push_back(x);
    }
    return scratch[x];
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    batch.u.push_back(local(a[i]));
    batch.v.push_back(local(b[i]));
  }
  for (NodeId x : batch.nodes) scratch[x] = 0xffffffffu;
  return batch;
}

template <class F>
double time_once(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

LatencyReport bench_inference(const TeacherModel& teacher, const StudentModel& student, const Graph& g,
                              const BenchSpec& spec) {
  if (g.num_nodes() < 2) throw ParameterError("bench_inference needs at least two nodes");
  if (spec.pairs == 0 || spec.repetitions == 0) throw ParameterError("bench_inference needs pairs and repetitions");
  Rng rng = make_rng(spec.seed, Stream::kBench);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(g.num_nodes() - 1));
  std::vector<NodeId> a(spec.pairs), b(spec.pairs);
  for (std::size_t i = 0; i < spec.pairs; ++i) {
    a[i] = pick(rng);
    do b[i] = pick(rng);
    while (b[i] == a[i]);
  }

  const int saved_threads = kernels::num_threads();
  kernels::set_num_threads(1);
  std::vector<std::uint32_t> scratch(g.num_nodes(), 0xffffffffu);
  SageWorkspace ws(g.num_nodes());
  double sink = 0.0;

  auto run_teacher = [&] {
    const PairBatch batch = localize(a, b, scratch);
    const Tensor h = sage_embed_nodes(teacher.encoder, g, batch.nodes, ws);
    const auto p = decode(teacher.decoder, h, batch.u, batch.v);
    sink += p.front();
  };
  auto run_student = [&] {
    const PairBatch batch = localize(a, b, scratch);
    const Tensor h = mlp_embed_rows(student.encoder, g.features(), batch.nodes);
    const auto p = decode(student.decoder, h, batch.u, batch.v);
    sink += p.front();
  };

  LatencyReport r;
  r.num_nodes = g.num_nodes();
  r.num_edges = g.num_edges();
  r.pairs = spec.pairs;
  for (std::size_t i = 0; i < spec.warmup; ++i) {
    run_teacher();
    run_student();
  }
  for (std::size_t i = 0; i < spec.repetitions; ++i) {
    r.teacher_seconds.push_back(time_once(run_teacher));
    r.student_seconds.push_back(time_once(run_student));
  }
  kernels::set_num_threads(saved_threads);
  if (!std::isfinite(sink)) throw NumericError("bench_inference produced non-finite scores");

  r.teacher_median = median(r.teacher_seconds);
  r.student_median = median(r.student_seconds);
  r.speedup = r.teacher_median / r.student_median;
  return r;
}

}  // namespace llp
