#pragma once

// Training loops for the SAGE teacher and the MLP students, with
// validation-based early stopping.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "llp/context.hpp"
#include "llp/losses.hpp"
#include "llp/models.hpp"
#include "llp/splits.hpp"

namespace llp {

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t hidden = 256;
  /// Student width = hidden * student_width_mult.
  std::size_t student_width_mult = 1;

  std::size_t student_hidden() const noexcept { return hidden * student_width_mult; }
  void validate() const;
};

struct TrainConfig {
  std::size_t max_epochs = 300;
  std::size_t patience = 30;
  double lr = 0.001;
  double dropout = 0.0;
  /// Positive edges per optimizer step (matched by as many negatives).
  std::size_t edge_batch = 2048;
  /// Anchors per optimizer step for the relational terms.
  std::size_t anchor_batch = 32;
  std::uint64_t seed = 0;
  /// Early stopping monitors validation Hits@hits_k.
  std::size_t hits_k = 20;
  LossConfig loss;
  ContextConfig context;

  void validate() const;
};

enum class Method { kMlp, kLogit, kRepr, kLlp };

Method parse_method(const std::string& s);
std::string to_string(Method m);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double seconds = 0.0;
};

struct RunRecord {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;

  /// "epoch train_loss val_metric" lines at round-trip precision; wall-clock
  /// times are left out so the file is reproducible.
  void write(std::ostream& out) const;
  double total_seconds() const;
};

/// Training-time view of a split. graph is the message graph seen during
/// training; it also defines which pairs count as known edges for negative
/// sampling. nodes lists the nodes visible during training (empty = all).
struct TrainingData {
  const Graph* graph = nullptr;
  EdgeSet train_pos;
  LabeledPairs val;
  std::vector<NodeId> nodes;

  static TrainingData from(const TransductiveSplit& s);
  static TrainingData from(const ProductionSplit& s);
};

struct TeacherResult {
  TeacherModel model;
  RunRecord record;
};

/// Optimizes BCE over train positives and per-epoch resampled negatives with
/// full-graph message passing; returns the best-validation checkpoint.
/// Throws ParameterError on an empty training or validation set.
TeacherResult train_teacher(const TrainingData& data, const ModelConfig& model, const TrainConfig& cfg);

/// Frozen teacher outputs consumed by the students.
struct TeacherArtifacts {
  /// Teacher embeddings of every node on the training message graph.
  Tensor embeddings;
  DecoderParams decoder;

  /// Teacher probabilities for the pairs (u[i], v[i]).
  std::vector<double> scores(std::span<const NodeId> u, std::span<const NodeId> v) const;
};

TeacherArtifacts precompute_teacher_artifacts(const TeacherModel& teacher, const Graph& message_graph);

struct StudentResult {
  StudentModel model;
  RunRecord record;
};

/// Trains an MLP student with the method's objective. Every method except
/// mlp needs teacher artifacts (UsageError otherwise). Relational terms with
/// zero weight are skipped entirely, so llp with beta = gamma = 0 and
/// alpha = 1 reproduces mlp exactly.
StudentResult distill_student(const TeacherArtifacts* teacher, const TrainingData& data, const ModelConfig& model,
                              const TrainConfig& cfg, Method method);

/// Validation Hits@k of a full embedding table.
double validation_hits(const DecoderParams& decoder, const Tensor& embeddings, const LabeledPairs& val,
                       std::size_t k);

}  // namespace llp
