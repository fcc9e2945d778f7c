#pragma once

// Training objectives. Student quantities are tape Vars; teacher quantities
// are plain values and never receive gradients.

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "llp/autodiff.hpp"
#include "llp/tensor.hpp"

namespace llp {

enum class MatchKind { kMse, kCosine };

MatchKind parse_match_kind(const std::string& s);
std::string to_string(MatchKind k);

struct LossConfig {
  /// Weight of the supervised term in logit / representation matching.
  double lambda = 0.5;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  /// Rank margin.
  double delta = 0.05;
  /// Softmax temperature of the distribution term.
  double tau = 1.0;
  MatchKind match = MatchKind::kMse;

  /// Throws ParameterError on out-of-range values.
  void validate() const;
};

/// Mean binary cross-entropy of probabilities (column vector) against 0/1
/// labels. Probabilities are clamped to [1e-12, 1 - 1e-12]; clamped entries
/// pass no gradient.
Var loss_sup(Var probs, std::span<const double> labels);

/// Same loss evaluated from logits, stable for large |logit|.
Var loss_sup_logits(Var logits, std::span<const double> labels);

/// Per-row mismatch averaged over rows: mean squared difference (mse) or
/// 1 - cos (cosine; zero rows count as cos = 0).
Var loss_match_rows(Var student, const Tensor& teacher, MatchKind kind);

/// Mismatch between a column of student probabilities and teacher
/// probabilities, matched as one vector.
Var loss_prob_match(Var student_probs, std::span<const double> teacher_probs, MatchKind kind);

/// lambda * sup + (1 - lambda) * match; returns sup itself when lambda == 1.
Var loss_mix(Var sup, Var match, double lambda);

/// lambda * loss_sup + (1 - lambda) * match(student, teacher), where the
/// batch of probabilities is matched as one vector.
Var loss_logit_match(Var student_probs, std::span<const double> teacher_probs, std::span<const double> labels,
                     double lambda, MatchKind kind);

/// lambda * loss_sup + (1 - lambda) * loss_match_rows(student_h, teacher_h).
/// Throws DimensionError when the embedding widths differ.
Var loss_repr_match(Var student_h, const Tensor& teacher_h, Var student_probs, std::span<const double> labels,
                    double lambda, MatchKind kind);

/// Result of a per-anchor loss. empty is set (and value is a zero constant)
/// when no anchor has at least two context scores.
struct RelationalLoss {
  Var value;
  bool empty = false;
};

/// Pairwise margin loss. Scores of anchor a occupy rows
/// [offsets[a], offsets[a+1]) of the column vector student. For every
/// unordered pair {i, j} the term is max(0, -r (s_i - s_j) + delta) with
/// r = 1 if t_i - t_j > delta, -1 if t_i - t_j < -delta, else 0. Terms are
/// averaged per anchor, then over anchors with at least two scores.
RelationalLoss loss_rank(Var student, std::span<const double> teacher, std::span<const std::size_t> offsets,
                         double delta);

/// Per anchor KL(softmax(t / tau) || softmax(s / tau)), averaged over anchors
/// with at least two scores.
RelationalLoss loss_dist(Var student, std::span<const double> teacher, std::span<const std::size_t> offsets,
                         double tau);

/// alpha * sup + beta * rank + gamma * dist. Terms with zero weight or no
/// value are left out of the graph entirely.
Var loss_total(Var sup, std::optional<Var> rank, std::optional<Var> dist, double alpha, double beta, double gamma);

}  // namespace llp
