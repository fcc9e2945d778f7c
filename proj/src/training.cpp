#include "llp/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <ostream>

#include "llp/errors.hpp"
#include "llp/evaluation.hpp"

namespace llp {

void ModelConfig::validate() const {
  if (layers == 0) throw ParameterError("model.layers must be >= 1");
  if (hidden == 0) throw ParameterError("model.hidden must be >= 1");
  if (student_width_mult == 0) throw ParameterError("model.student_width_mult must be >= 1");
}

void TrainConfig::validate() const {
  if (max_epochs == 0) throw ParameterError("train.max_epochs must be >= 1");
  if (patience > max_epochs) throw ParameterError("train.patience must not exceed train.max_epochs");
  if (!(lr > 0.0)) throw ParameterError("train.lr must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("train.dropout must be in [0, 1)");
  if (edge_batch == 0 || anchor_batch == 0) throw ParameterError("batch sizes must be >= 1");
  if (hits_k == 0) throw ParameterError("train.hits_k must be >= 1");
  loss.validate();
}

Method parse_method(const std::string& s) {
  if (s == "mlp") return Method::kMlp;
  if (s == "logit") return Method::kLogit;
  if (s == "repr") return Method::kRepr;
  if (s == "llp") return Method::kLlp;
  throw ParameterError("unknown method '" + s + "' (expected mlp, logit, repr or llp)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kMlp: return "mlp";
    case Method::kLogit: return "logit";
    case Method::kRepr: return "repr";
    case Method::kLlp: return "llp";
  }
  return "?";
}

void RunRecord::write(std::ostream& out) const {
  char buf[64];
  auto real = [&](double x) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
  };
  out << "# epoch train_loss val_metric\n";
  for (const auto& e : epochs) out << e.epoch << ' ' << real(e.train_loss) << ' ' << real(e.val_metric) << '\n';
  out << "# best_epoch " << best_epoch << " best_val " << real(best_val) << '\n';
}

double RunRecord::total_seconds() const {
  double s = 0.0;
  for (const auto& e : epochs) s += e.seconds;
  return s;
}

TrainingData TrainingData::from(const TransductiveSplit& s) { return {&s.message_graph, s.train_pos, s.val, {}}; }

TrainingData TrainingData::from(const ProductionSplit& s) {
  return {&s.train_message_graph, s.train_pos, s.val, s.existing_nodes};
}

double validation_hits(const DecoderParams& decoder, const Tensor& embeddings, const LabeledPairs& val,
                       std::size_t k) {
  return hits_at_k({score_pairs(decoder, embeddings, val.pos), score_pairs(decoder, embeddings, val.neg)}, k);
}

std::vector<double> TeacherArtifacts::scores(std::span<const NodeId> u, std::span<const NodeId> v) const {
  return decode(decoder, embeddings, u, v);
}

TeacherArtifacts precompute_teacher_artifacts(const TeacherModel& teacher, const Graph& message_graph) {
  return {sage_embed(teacher.encoder, message_graph), teacher.decoder};
}

namespace {

void check_data(const TrainingData& data) {
  if (!data.graph) throw UsageError("training data without a message graph");
  if (data.train_pos.empty()) throw ParameterError("empty training edge set");
  if (data.val.pos.empty() || data.val.neg.empty()) throw ParameterError("empty validation set");
}

// One epoch's supervised pairs: shuffled positives and fresh negatives.
struct EpochPairs {
  std::vector<NodeId> pos_u, pos_v, neg_u, neg_v;
  std::size_t steps = 0;
  std::size_t batch = 0;
};

EpochPairs epoch_pairs(const TrainingData& data, const TrainConfig& cfg, std::size_t epoch, std::size_t capacity) {
  EpochPairs ep;
  std::vector<std::size_t> order(data.train_pos.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = make_rng(cfg.seed, Stream::kShuffle, epoch);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  for (std::size_t i : order) {
    ep.pos_u.push_back(data.train_pos[i].u);
    ep.pos_v.push_back(data.train_pos[i].v);
  }
  Rng neg_rng = make_rng(cfg.seed, Stream::kNegatives, epoch);
  const EdgeSet neg =
      sample_negatives(*data.graph, std::min(capacity, data.train_pos.size()), EdgeSet{}, neg_rng, data.nodes);
  for (const auto& e : neg) {
    ep.neg_u.push_back(e.u);
    ep.neg_v.push_back(e.v);
  }
  ep.batch = cfg.edge_batch;
  ep.steps = (ep.pos_u.size() + ep.batch - 1) / ep.batch;
  return ep;
}

// Pairs of step s: positives then negatives, with 1/0 labels.
struct StepPairs {
  std::vector<NodeId> u, v;
  std::vector<double> labels;
};

StepPairs step_pairs(const EpochPairs& ep, std::size_t s) {
  StepPairs sp;
  auto take = [&](const std::vector<NodeId>& a, const std::vector<NodeId>& b, double label) {
    const std::size_t lo = std::min(a.size(), s * ep.batch);
    const std::size_t hi = std::min(a.size(), lo + ep.batch);
    sp.u.insert(sp.u.end(), a.begin() + static_cast<std::ptrdiff_t>(lo), a.begin() + static_cast<std::ptrdiff_t>(hi));
    sp.v.insert(sp.v.end(), b.begin() + static_cast<std::ptrdiff_t>(lo), b.begin() + static_cast<std::ptrdiff_t>(hi));
    sp.labels.insert(sp.labels.end(), hi - lo, label);
  };
  take(ep.pos_u, ep.pos_v, 1.0);
  take(ep.neg_u, ep.neg_v, 0.0);
  return sp;
}

// Maps global node ids to rows of a compact feature block.
class LocalIndex {
 public:
  explicit LocalIndex(std::size_t n) : slot_(n, kUnset) {}

  std::uint32_t operator()(NodeId v) {
    if (slot_[v] == kUnset) {
      slot_[v] = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back(v);
    }
    return slot_[v];
  }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  void reset() {
    for (NodeId v : nodes_) slot_[v] = kUnset;
    nodes_.clear();
  }

 private:
  static constexpr std::uint32_t kUnset = 0xffffffffu;
  std::vector<std::uint32_t> slot_;
  std::vector<NodeId> nodes_;
};

Tensor gather(const Tensor& x, std::span<const NodeId> rows) {
  Tensor out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), out.row(r).begin());
  return out;
}

void adam_step(Adam& adam, Tape& tape, const std::vector<Tensor*>& params, const std::vector<Var>& vars) {
  std::vector<Tensor> grads;
  grads.reserve(vars.size());
  for (Var v : vars) grads.push_back(tape.grad(v));
  std::vector<const Tensor*> gp;
  for (const Tensor& g : grads) gp.push_back(&g);
  adam.step(params, gp);
}

// Runs epochs until max_epochs or patience runs out. epoch_fn trains one
// epoch and returns its mean loss; val_fn scores the current parameters;
// keep_fn snapshots them as the best so far.
template <class EpochFn, class ValFn, class KeepFn>
RunRecord run_epochs(const TrainConfig& cfg, EpochFn&& epoch_fn, ValFn&& val_fn, KeepFn&& keep_fn) {
  RunRecord rec;
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double loss = epoch_fn(epoch);
    const double val = val_fn();
    const auto t1 = std::chrono::steady_clock::now();
    rec.epochs.push_back({epoch, loss, val, std::chrono::duration<double>(t1 - t0).count()});
    if (!have_best || val > rec.best_val) {
      have_best = true;
      rec.best_val = val;
      rec.best_epoch = epoch;
      keep_fn();
    }
    if (epoch - rec.best_epoch >= cfg.patience) break;
  }
  return rec;
}

}  // namespace

TeacherResult train_teacher(const TrainingData& data, const ModelConfig& model, const TrainConfig& cfg) {
  check_data(data);
  model.validate();
  cfg.validate();
  const Graph& g = *data.graph;
  TeacherModel current = TeacherModel::init(g.num_features(), model.hidden, model.layers, cfg.seed);
  TeacherModel best = current;
  Adam adam(cfg.lr);
  const std::size_t capacity = negative_capacity(g, EdgeSet{}, data.nodes);
  const auto csr = g.csr();

  auto epoch_fn = [&](std::size_t epoch) {
    const EpochPairs ep = epoch_pairs(data, cfg, epoch, capacity);
    Rng drop_rng = make_rng(cfg.seed, Stream::kDropout, epoch);
    double total = 0.0;
    for (std::size_t s = 0; s < ep.steps; ++s) {
      const StepPairs sp = step_pairs(ep, s);
      Tape tape;
      std::vector<Tensor*> enc = current.encoder.tensors();
      std::vector<Tensor*> dec = current.decoder.tensors();
      const auto enc_vars = bind_params(tape, std::vector<const Tensor*>(enc.begin(), enc.end()), true);
      const auto dec_vars = bind_params(tape, std::vector<const Tensor*>(dec.begin(), dec.end()), true);
      Var x = tape.constant(g.features());
      Var h = sage_forward(enc_vars, x, csr, cfg.dropout, &drop_rng);
      Var logits = decode_logits(dec_vars, h, sp.u, sp.v);
      Var loss = loss_sup_logits(logits, sp.labels);
      total += tape.value(loss).item();
      tape.backward(loss);
      std::vector<Tensor*> params = enc;
      params.insert(params.end(), dec.begin(), dec.end());
      std::vector<Var> vars = enc_vars;
      vars.insert(vars.end(), dec_vars.begin(), dec_vars.end());
      adam_step(adam, tape, params, vars);
    }
    return total / static_cast<double>(ep.steps);
  };
  auto val_fn = [&] {
    return validation_hits(current.decoder, sage_embed(current.encoder, g), data.val, cfg.hits_k);
  };
  RunRecord rec = run_epochs(cfg, epoch_fn, val_fn, [&] { best = current; });
  return {std::move(best), std::move(rec)};
}

StudentResult distill_student(const TeacherArtifacts* teacher, const TrainingData& data, const ModelConfig& model,
                              const TrainConfig& cfg, Method method) {
  check_data(data);
  model.validate();
  cfg.validate();
  if (method != Method::kMlp && !teacher) {
    throw UsageError("method " + to_string(method) + " needs a trained teacher");
  }
  const Graph& g = *data.graph;
  const Tensor& x = g.features();
  const LossConfig& lc = cfg.loss;
  const bool relational = method == Method::kLlp && (lc.beta > 0.0 || lc.gamma > 0.0);

  StudentModel current = StudentModel::init(g.num_features(), model.student_hidden(), model.layers, cfg.seed);
  current.method = to_string(method);

  // Learned projection onto the teacher width for representation matching.
  std::optional<Tensor> projection;
  if (method == Method::kRepr && teacher->embeddings.cols() != model.student_hidden()) {
    Rng prng(derive_seed(cfg.seed, Stream::kInit, static_cast<std::uint64_t>(InitSlot::kProjection)));
    const double limit =
        std::sqrt(6.0 / static_cast<double>(model.student_hidden() + teacher->embeddings.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    projection = Tensor(model.student_hidden(), teacher->embeddings.cols());
    for (double& w : projection->values()) w = dist(prng);
  }

  StudentModel best = current;
  Adam adam(cfg.lr);
  const std::size_t capacity = negative_capacity(g, EdgeSet{}, data.nodes);
  std::vector<NodeId> anchors = data.nodes;
  if (anchors.empty()) {
    anchors.resize(g.num_nodes());
    std::iota(anchors.begin(), anchors.end(), NodeId{0});
  }
  LocalIndex local(g.num_nodes());

  auto epoch_fn = [&](std::size_t epoch) {
    const EpochPairs ep = epoch_pairs(data, cfg, epoch, capacity);
    Rng drop_rng = make_rng(cfg.seed, Stream::kDropout, epoch);

    // Anchor schedule: a shuffled prefix of the anchors, spread over the steps.
    std::vector<NodeId> epoch_anchors;
    std::vector<ContextSet> contexts;
    Rng rel_drop_rng = make_rng(cfg.seed, Stream::kRelationalDropout, epoch);
    if (relational) {
      epoch_anchors = anchors;
      Rng anchor_rng = make_rng(cfg.seed, Stream::kAnchors, epoch);
      std::shuffle(epoch_anchors.begin(), epoch_anchors.end(), anchor_rng);
      epoch_anchors.resize(std::min(epoch_anchors.size(), ep.steps * cfg.anchor_batch));
      Rng ctx_rng = make_rng(cfg.seed, Stream::kContext, epoch);
      for (NodeId a : epoch_anchors) contexts.push_back(sample_context(g, a, cfg.context, ctx_rng));
    }

    double total = 0.0;
    for (std::size_t s = 0; s < ep.steps; ++s) {
      const StepPairs sp = step_pairs(ep, s);
      Tape tape;
      std::vector<Tensor*> params = current.encoder.tensors();
      const std::size_t n_enc = params.size();
      for (Tensor* t : current.decoder.tensors()) params.push_back(t);
      if (projection) params.push_back(&*projection);
      const auto vars = bind_params(tape, std::vector<const Tensor*>(params.begin(), params.end()), true);
      const std::span<const Var> enc_vars(vars.data(), n_enc);
      const std::span<const Var> dec_vars(vars.data() + n_enc, 4);

      // Supervised pairs.
      local.reset();
      std::vector<std::uint32_t> lu, lv;
      for (std::size_t i = 0; i < sp.u.size(); ++i) {
        lu.push_back(local(sp.u[i]));
        lv.push_back(local(sp.v[i]));
      }
      Var h = mlp_forward(enc_vars, tape.constant(gather(x, local.nodes())), cfg.dropout, &drop_rng);
      Var logits = decode_logits(dec_vars, h, lu, lv);
      Var loss = loss_sup_logits(logits, sp.labels);

      if (method == Method::kLogit && lc.lambda < 1.0) {
        const auto t = teacher->scores(sp.u, sp.v);
        loss = loss_mix(loss, loss_prob_match(ad::sigmoid(logits), t, lc.match), lc.lambda);
      } else if (method == Method::kRepr && lc.lambda < 1.0) {
        Var hs = projection ? ad::matmul(h, vars.back()) : h;
        loss = loss_mix(loss, loss_match_rows(hs, gather(teacher->embeddings, local.nodes()), lc.match), lc.lambda);
      } else if (method == Method::kLlp) {
        std::optional<Var> rank, dist;
        const std::size_t a0 = std::min(epoch_anchors.size(), s * cfg.anchor_batch);
        const std::size_t a1 = std::min(epoch_anchors.size(), a0 + cfg.anchor_batch);
        if (relational && a0 < a1) {
          ContextBatch batch;
          for (std::size_t a = a0; a < a1; ++a) batch.add(contexts[a]);
          if (batch.num_pairs() > 0) {
            local.reset();
            std::vector<std::uint32_t> ca, cn;
            for (std::size_t i = 0; i < batch.num_pairs(); ++i) {
              ca.push_back(local(batch.anchor[i]));
              cn.push_back(local(batch.node[i]));
            }
            Var hc = mlp_forward(enc_vars, tape.constant(gather(x, local.nodes())), cfg.dropout, &rel_drop_rng);
            Var scores = ad::sigmoid(decode_logits(dec_vars, hc, ca, cn));
            const auto t = teacher->scores(batch.anchor, batch.node);
            if (lc.beta > 0.0) {
              auto r = loss_rank(scores, t, batch.offsets, lc.delta);
              if (!r.empty) rank = r.value;
            }
            if (lc.gamma > 0.0) {
              auto d = loss_dist(scores, t, batch.offsets, lc.tau);
              if (!d.empty) dist = d.value;
            }
          }
        }
        loss = loss_total(loss, rank, dist, lc.alpha, lc.beta, lc.gamma);
      }

      total += tape.value(loss).item();
      if (tape.requires_grad(loss)) {
        tape.backward(loss);
        adam_step(adam, tape, params, vars);
      }
    }
    return total / static_cast<double>(ep.steps);
  };
  auto val_fn = [&] {
    return validation_hits(current.decoder, mlp_embed(current.encoder, x), data.val, cfg.hits_k);
  };
  RunRecord rec = run_epochs(cfg, epoch_fn, val_fn, [&] { best = current; });
  return {std::move(best), std::move(rec)};
}

}  // namespace llp
