#pragma once

// Ranking metrics, per-stratum evaluation reports aggregated over seeds, and
// the inference latency benchmark.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "llp/graph.hpp"
#include "llp/models.hpp"
#include "llp/splits.hpp"

namespace llp {

struct ScoreSet {
  std::vector<double> pos;
  std::vector<double> neg;
};

/// Fraction of positives scored strictly above the k-th largest negative.
/// When k > |neg| every positive counts. Throws MetricError on empty
/// positives or negatives, non-finite scores, or k == 0.
double hits_at_k(const ScoreSet& s, std::size_t k);

/// Probability that a random positive outranks a random negative, ties
/// counted one half. Throws MetricError on empty lists or non-finite scores.
double auc(const ScoreSet& s);

/// What a model is evaluated on: the message graph used by graph models and
/// the named test strata.
struct EvalTarget {
  const Graph* message_graph = nullptr;
  std::vector<std::pair<std::string, const LabeledPairs*>> strata;
};

/// Transductive: one "overall" stratum scored on the training message graph.
EvalTarget eval_target(const TransductiveSplit& s);
/// Production: "overall", "EE", "EN", "NN" on the inference message graph.
EvalTarget eval_target(const ProductionSplit& s);
/// Cold start: production strata on the graph without new-node edges.
EvalTarget eval_target(const ColdStartView& v);

struct StratumMetrics {
  std::map<std::size_t, double> hits;  // k -> fraction
  double auc = 0.0;
  std::size_t num_pos = 0;
  std::size_t num_neg = 0;
};

/// Metrics of one trained model on one split, per stratum in report order.
/// Strata without positives are absent rather than zero.
struct MetricsReport {
  std::vector<std::string> strata;
  std::map<std::string, StratumMetrics> values;
};

MetricsReport evaluate_split(const TeacherModel& m, const EvalTarget& target, const std::vector<std::size_t>& ks);
MetricsReport evaluate_split(const StudentModel& m, const EvalTarget& target, const std::vector<std::size_t>& ks);
/// Shared tail of both overloads: metrics from a full embedding table.
MetricsReport evaluate_embeddings(const DecoderParams& decoder, const Tensor& embeddings, const EvalTarget& target,
                                  const std::vector<std::size_t>& ks);

/// Per-seed reports and their mean / sample standard deviation.
class MetricsTable {
 public:
  void add(std::uint64_t seed, const MetricsReport& report);

  struct Summary {
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> values;
  };

  /// Metric names in output order, e.g. "hits@20", "auc".
  std::vector<std::string> metric_names() const;
  const std::vector<std::string>& strata() const noexcept { return strata_; }
  const std::vector<std::uint64_t>& seeds() const noexcept { return seeds_; }
  /// Summary over seeds of metric in stratum; throws MetricError if absent.
  Summary summary(const std::string& metric, const std::string& stratum) const;
  bool has(const std::string& metric, const std::string& stratum) const;

  /// "metric.stratum.seed = value" lines (x100, two decimals), then
  /// "metric.stratum.mean" and "metric.stratum.std" lines.
  void write_kv(std::ostream& out) const;
  /// Aligned human-readable table of mean +- std.
  void write_table(std::ostream& out, const std::string& title) const;

 private:
  std::vector<std::uint64_t> seeds_;
  std::vector<std::string> strata_;
  std::vector<std::string> metrics_;
  // (metric, stratum) -> per-seed values aligned with seeds_ (NaN if absent).
  std::map<std::pair<std::string, std::string>, std::vector<double>> values_;
};

/// x100 with two decimals, as used in every report.
std::string format_percent(double fraction);

struct BenchSpec {
  std::size_t pairs = 1000;
  std::size_t repetitions = 10;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
};

struct LatencyReport {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t pairs = 0;
  std::vector<double> teacher_seconds;
  std::vector<double> student_seconds;
  double teacher_median = 0.0;
  double student_median = 0.0;
  double speedup = 0.0;

  void write_kv(std::ostream& out) const;
};

/// Scores one fixed batch of random node pairs end to end (embedding and
/// decoding) with each model, single-threaded. The teacher embeds only the
/// L-hop computation subgraph of the batch; the student reads features only.
LatencyReport bench_inference(const TeacherModel& teacher, const StudentModel& student, const Graph& g,
                              const BenchSpec& spec);

double median(std::vector<double> v);

}  // namespace llp
