#include "llp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "llp/errors.hpp"

namespace llp {

MatchKind parse_match_kind(const std::string& s) {
  if (s == "mse") return MatchKind::kMse;
  if (s == "cosine") return MatchKind::kCosine;
  throw ParameterError("unknown match kind '" + s + "' (expected mse or cosine)");
}

std::string to_string(MatchKind k) { return k == MatchKind::kMse ? "mse" : "cosine"; }

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("loss.lambda must be in [0, 1]");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) throw ParameterError("loss weights must be >= 0");
  if (!(delta >= 0.0)) throw ParameterError("loss.delta must be >= 0");
  if (!(tau > 0.0)) throw ParameterError("loss.tau must be > 0");
}

namespace {

constexpr double kProbEps = 1e-12;

const Tensor& column_of(Var v, std::size_t n, const char* what) {
  const Tensor& t = v.tape->value(v);
  if (t.cols() != 1 || t.rows() != n) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(n) + " x 1 scores, got " +
                         std::to_string(t.rows()) + " x " + std::to_string(t.cols()));
  }
  return t;
}

void check_labels(std::span<const double> labels, const char* what) {
  if (labels.empty()) throw DimensionError(std::string(what) + ": empty batch");
  for (double a : labels) {
    if (a != 0.0 && a != 1.0) throw ParameterError(std::string(what) + ": labels must be 0 or 1");
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lambda must be in [0, 1]");
}

void check_offsets(std::span<const std::size_t> offsets, std::size_t rows, const char* what) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != rows) {
    throw DimensionError(std::string(what) + ": offsets must start at 0 and end at the score count");
  }
  for (std::size_t a = 1; a < offsets.size(); ++a) {
    if (offsets[a] < offsets[a - 1]) throw DimensionError(std::string(what) + ": offsets not monotone");
  }
}

}  // namespace

Var loss_sup(Var probs, std::span<const double> labels) {
  check_labels(labels, "loss_sup");
  const Tensor& y = column_of(probs, labels.size(), "loss_sup");
  const double n = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(y[i], kProbEps, 1.0 - kProbEps);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  std::vector<double> a(labels.begin(), labels.end());
  return probs.tape->record(Tensor::scalar(total / n), std::span<const Var>(&probs, 1),
                            [probs, a = std::move(a), n](Tape& t, const Tensor&, const Tensor& g) {
                              const Tensor& y = t.value(probs);
                              Tensor& gy = t.grad_buffer(probs);
                              for (std::size_t i = 0; i < a.size(); ++i) {
                                if (!(y[i] > kProbEps && y[i] < 1.0 - kProbEps)) continue;
                                gy[i] += g[0] * -(a[i] / y[i] - (1.0 - a[i]) / (1.0 - y[i])) / n;
                              }
                            });
}

Var loss_sup_logits(Var logits, std::span<const double> labels) {
  check_labels(labels, "loss_sup_logits");
  const Tensor& z = column_of(logits, labels.size(), "loss_sup_logits");
  const double n = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // softplus(z) - a z
    total += std::max(z[i], 0.0) + std::log1p(std::exp(-std::abs(z[i]))) - labels[i] * z[i];
  }
  std::vector<double> a(labels.begin(), labels.end());
  return logits.tape->record(Tensor::scalar(total / n), std::span<const Var>(&logits, 1),
                             [logits, a = std::move(a), n](Tape& t, const Tensor&, const Tensor& g) {
                               const Tensor& z = t.value(logits);
                               Tensor& gz = t.grad_buffer(logits);
                               for (std::size_t i = 0; i < a.size(); ++i) {
                                 const double s = z[i] >= 0 ? 1.0 / (1.0 + std::exp(-z[i]))
                                                            : std::exp(z[i]) / (1.0 + std::exp(z[i]));
                                 gz[i] += g[0] * (s - a[i]) / n;
                               }
                             });
}

Var loss_match_rows(Var student, const Tensor& teacher, MatchKind kind) {
  const Tensor& s = student.tape->value(student);
  if (!s.same_shape(teacher)) {
    throw DimensionError("match: student " + std::to_string(s.rows()) + " x " + std::to_string(s.cols()) +
                         " vs teacher " + std::to_string(teacher.rows()) + " x " + std::to_string(teacher.cols()));
  }
  if (s.empty()) throw DimensionError("match: empty batch");
  const std::size_t rows = s.rows(), cols = s.cols();

  if (kind == MatchKind::kMse) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = s[i] - teacher[i];
      total += d * d;
    }
    const double denom = static_cast<double>(s.size());
    return student.tape->record(Tensor::scalar(total / denom), std::span<const Var>(&student, 1),
                                [student, teacher, denom](Tape& t, const Tensor&, const Tensor& g) {
                                  const Tensor& s = t.value(student);
                                  Tensor& gs = t.grad_buffer(student);
                                  for (std::size_t i = 0; i < s.size(); ++i) {
                                    gs[i] += g[0] * 2.0 * (s[i] - teacher[i]) / denom;
                                  }
                                });
  }

  // 1 - cos per row. Row norms are cached for the backward pass.
  std::vector<double> dot(rows), ns(rows), nt(rows);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double d = 0, a = 0, b = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      d += s(r, c) * teacher(r, c);
      a += s(r, c) * s(r, c);
      b += teacher(r, c) * teacher(r, c);
    }
    dot[r] = d;
    ns[r] = std::sqrt(a);
    nt[r] = std::sqrt(b);
    const double cos = (ns[r] > 0 && nt[r] > 0) ? d / (ns[r] * nt[r]) : 0.0;
    total += 1.0 - cos;
  }
  const double n = static_cast<double>(rows);
  return student.tape->record(
      Tensor::scalar(total / n), std::span<const Var>(&student, 1),
      [student, teacher, dot, ns, nt, n, cols](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& s = t.value(student);
        Tensor& gs = t.grad_buffer(student);
        for (std::size_t r = 0; r < dot.size(); ++r) {
          if (!(ns[r] > 0 && nt[r] > 0)) continue;
          // d cos / d s = t / (|s||t|) - (s.t) s / (|s|^3 |t|)
          const double inv = 1.0 / (ns[r] * nt[r]);
          const double k = dot[r] / (ns[r] * ns[r] * ns[r] * nt[r]);
          for (std::size_t c = 0; c < cols; ++c) {
            gs(r, c) -= g[0] * (teacher(r, c) * inv - s(r, c) * k) / n;
          }
        }
      });
}

Var loss_mix(Var sup, Var match, double lambda) {
  check_lambda(lambda);
  if (lambda == 1.0) return sup;
  return ad::add(ad::scale(sup, lambda), ad::scale(match, 1.0 - lambda));
}

Var loss_prob_match(Var student_probs, std::span<const double> teacher_probs, MatchKind kind) {
  const Tensor& sp = column_of(student_probs, teacher_probs.size(), "loss_prob_match");
  if (kind == MatchKind::kMse) {
    Tensor teacher(sp.rows(), 1, std::vector<double>(teacher_probs.begin(), teacher_probs.end()));
    return loss_match_rows(student_probs, teacher, kind);
  }
  // Cosine compares the whole batch as one vector, so lay it out as a row.
  Tensor teacher(1, sp.rows(), std::vector<double>(teacher_probs.begin(), teacher_probs.end()));
  Var as_row = student_probs.tape->record(
      Tensor(1, sp.rows(), std::vector<double>(sp.values().begin(), sp.values().end())),
      std::span<const Var>(&student_probs, 1), [student_probs](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gs = t.grad_buffer(student_probs);
        for (std::size_t i = 0; i < g.size(); ++i) gs[i] += g[i];
      });
  return loss_match_rows(as_row, teacher, kind);
}

Var loss_logit_match(Var student_probs, std::span<const double> teacher_probs, std::span<const double> labels,
                     double lambda, MatchKind kind) {
  check_lambda(lambda);
  if (teacher_probs.size() != labels.size()) throw DimensionError("loss_logit_match: teacher/label length mismatch");
  Var sup = loss_sup(student_probs, labels);
  if (lambda == 1.0) return sup;
  return loss_mix(sup, loss_prob_match(student_probs, teacher_probs, kind), lambda);
}

Var loss_repr_match(Var student_h, const Tensor& teacher_h, Var student_probs, std::span<const double> labels,
                    double lambda, MatchKind kind) {
  check_lambda(lambda);
  const Tensor& s = student_h.tape->value(student_h);
  if (s.cols() != teacher_h.cols()) {
    throw DimensionError("loss_repr_match: student width " + std::to_string(s.cols()) + " != teacher width " +
                         std::to_string(teacher_h.cols()) + " (configure a projection)");
  }
  Var sup = loss_sup(student_probs, labels);
  if (lambda == 1.0) return sup;
  return loss_mix(sup, loss_match_rows(student_h, teacher_h, kind), lambda);
}

RelationalLoss loss_rank(Var student, std::span<const double> teacher, std::span<const std::size_t> offsets,
                         double delta) {
  if (!(delta >= 0.0)) throw ParameterError("loss_rank: delta must be >= 0");
  const Tensor& s = column_of(student, teacher.size(), "loss_rank");
  check_offsets(offsets, teacher.size(), "loss_rank");

  std::vector<std::size_t> seg(offsets.begin(), offsets.end());
  std::size_t valid = 0;
  for (std::size_t a = 0; a + 1 < seg.size(); ++a) valid += (seg[a + 1] - seg[a] >= 2);
  if (valid == 0) return {student.tape->constant(Tensor::scalar(0.0)), true};

  auto sign = [delta](double gap) { return gap > delta ? 1.0 : (gap < -delta ? -1.0 : 0.0); };
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < seg.size(); ++a) {
    const std::size_t b = seg[a], e = seg[a + 1], m = e - b;
    if (m < 2) continue;
    double sum = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = i + 1; j < e; ++j) {
        const double r = sign(teacher[i] - teacher[j]);
        sum += std::max(0.0, -r * (s[i] - s[j]) + delta);
      }
    }
    total += sum / static_cast<double>(m * (m - 1) / 2);
  }
  const double n = static_cast<double>(valid);
  std::vector<double> t(teacher.begin(), teacher.end());
  Var out = student.tape->record(
      Tensor::scalar(total / n), std::span<const Var>(&student, 1),
      [student, t = std::move(t), seg = std::move(seg), sign, delta, n](Tape& tape, const Tensor&, const Tensor& g) {
        const Tensor& s = tape.value(student);
        Tensor& gs = tape.grad_buffer(student);
        for (std::size_t a = 0; a + 1 < seg.size(); ++a) {
          const std::size_t b = seg[a], e = seg[a + 1], m = e - b;
          if (m < 2) continue;
          const double w = g[0] / (n * static_cast<double>(m * (m - 1) / 2));
          for (std::size_t i = b; i < e; ++i) {
            for (std::size_t j = i + 1; j < e; ++j) {
              const double r = sign(t[i] - t[j]);
              if (r == 0.0 || -r * (s[i] - s[j]) + delta <= 0.0) continue;
              gs[i] -= w * r;
              gs[j] += w * r;
            }
          }
        }
      });
  return {out, false};
}

RelationalLoss loss_dist(Var student, std::span<const double> teacher, std::span<const std::size_t> offsets,
                         double tau) {
  if (!(tau > 0.0)) throw ParameterError("loss_dist: tau must be > 0");
  column_of(student, teacher.size(), "loss_dist");
  check_offsets(offsets, teacher.size(), "loss_dist");

  // Anchors with fewer than two scores are dropped: their distribution is a
  // point mass and carries no relational signal.
  std::vector<std::size_t> keep_rows;
  std::vector<std::size_t> seg{0};
  for (std::size_t a = 0; a + 1 < offsets.size(); ++a) {
    if (offsets[a + 1] - offsets[a] < 2) continue;
    for (std::size_t i = offsets[a]; i < offsets[a + 1]; ++i) keep_rows.push_back(i);
    seg.push_back(keep_rows.size());
  }
  const std::size_t valid = seg.size() - 1;
  if (valid == 0) return {student.tape->constant(Tensor::scalar(0.0)), true};

  // Teacher distribution p and the constant sum p log p.
  std::vector<double> p(keep_rows.size());
  double plogp = 0.0;
  for (std::size_t a = 0; a < valid; ++a) {
    double mx = -INFINITY;
    for (std::size_t i = seg[a]; i < seg[a + 1]; ++i) mx = std::max(mx, teacher[keep_rows[i]] / tau);
    double z = 0.0;
    for (std::size_t i = seg[a]; i < seg[a + 1]; ++i) z += std::exp(teacher[keep_rows[i]] / tau - mx);
    const double logz = mx + std::log(z);
    for (std::size_t i = seg[a]; i < seg[a + 1]; ++i) {
      const double logp = teacher[keep_rows[i]] / tau - logz;
      p[i] = std::exp(logp);
      plogp += p[i] * logp;
    }
  }

  Var s = student;
  if (keep_rows.size() != teacher.size()) {
    std::vector<std::uint32_t> idx(keep_rows.begin(), keep_rows.end());
    s = ad::gather_rows(student, idx);
  }
  Var logq = ad::segment_log_softmax(s, seg, tau);
  const double n = static_cast<double>(valid);
  Tensor weights(p.size(), 1);
  for (std::size_t i = 0; i < p.size(); ++i) weights[i] = -p[i] / n;
  Var cross = ad::sum(ad::mul(logq, student.tape->constant(std::move(weights))));
  Var kl = ad::add_scalar(cross, plogp / n);
  // Rounding can leave a tiny negative residue at the optimum.
  if (student.tape->value(kl)[0] < 0.0) kl = ad::clamp(kl, 0.0, INFINITY);
  return {kl, false};
}

Var loss_total(Var sup, std::optional<Var> rank, std::optional<Var> dist, double alpha, double beta, double gamma) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) throw ParameterError("loss weights must be >= 0");
  std::optional<Var> total;
  auto add_term = [&](std::optional<Var> term, double w) {
    if (!term || w == 0.0) return;
    Var weighted = w == 1.0 ? *term : ad::scale(*term, w);
    total = total ? ad::add(*total, weighted) : weighted;
  };
  add_term(sup, alpha);
  add_term(rank, beta);
  add_term(dist, gamma);
  if (!total) return sup.tape->constant(Tensor::scalar(0.0));
  return *total;
}

}  // namespace llp
