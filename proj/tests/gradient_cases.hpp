#pragma once

// Randomized gradient checks for every loss and both encoders, shared by the
// unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "llp/losses.hpp"
#include "llp/models.hpp"
#include "support.hpp"

namespace llp::testing {

struct GradientCase {
  std::string name;
  double worst = 0.0;
};

namespace detail {

inline std::vector<Tensor*> pointers(std::vector<Tensor>& ts) {
  std::vector<Tensor*> out;
  for (Tensor& t : ts) out.push_back(&t);
  return out;
}

inline std::vector<Tensor> owned(std::vector<Tensor*> ts) {
  std::vector<Tensor> out;
  for (Tensor* t : ts) out.push_back(*t);
  return out;
}

inline std::vector<double> labels_for(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> y(n);
  for (auto& v : y) v = static_cast<double>(rng() & 1u);
  return y;
}

// Random anchor segmentation of n scores into groups of 1..5 entries.
inline std::vector<std::size_t> random_offsets(std::size_t anchors, std::mt19937_64& rng) {
  std::vector<std::size_t> off{0};
  for (std::size_t a = 0; a < anchors; ++a) off.push_back(off.back() + random_size(rng, 1, 5));
  return off;
}

inline void perturb(std::vector<Tensor>& ts, std::mt19937_64& rng) {
  // Non-zero biases so ReLU boundaries are not hit at initialization.
  for (Tensor& t : ts) {
    for (double& x : t.values()) x += std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
  }
}

}  // namespace detail

/// Runs `points` random configurations per case and reports the worst
/// relative error of each.
inline std::vector<GradientCase> run_gradient_cases(int points, std::uint64_t seed) {
  using detail::pointers;
  std::mt19937_64 rng(seed);
  std::vector<GradientCase> out;
  auto track = [&](const std::string& name, double err) {
    for (auto& c : out) {
      if (c.name == name) {
        c.worst = std::max(c.worst, err);
        return;
      }
    }
    out.push_back({name, err});
  };

  for (int it = 0; it < points; ++it) {
    const std::size_t n = random_size(rng, 2, 7), f = random_size(rng, 1, 4), d = random_size(rng, 1, 4);
    const std::size_t layers = random_size(rng, 1, 2);
    const std::uint64_t wseed = rng();

    // SAGE forward: gradient of a weighted sum of embeddings w.r.t. every
    // parameter and the input features.
    {
      const Graph g = random_graph(n, 0.4, f, rng);
      SageParams p = SageParams::init(f, d, layers, rng());
      std::vector<Tensor> ts = detail::owned(p.tensors());
      detail::perturb(ts, rng);
      ts.push_back(g.features());
      const Tensor w = random_tensor(n, d, rng);
      const auto gc = grad_check(pointers(ts), [&](Tape& tape, const std::vector<Var>& v) {
        const std::span<const Var> params(v.data(), v.size() - 1);
        Var h = sage_forward(params, v.back(), g.csr(), 0.0, nullptr);
        return ad::sum(ad::mul(h, tape.constant(w)));
      });
      track("sage_forward", gc.error());
    }

    // MLP forward with dropout under a fixed mask.
    {
      MlpParams p = MlpParams::init(f, d, layers, rng());
      std::vector<Tensor> ts = detail::owned(p.tensors());
      detail::perturb(ts, rng);
      ts.push_back(random_tensor(n, f, rng));
      const Tensor w = random_tensor(n, d, rng);
      const double rate = (it % 2) ? 0.3 : 0.0;
      const auto gc = grad_check(pointers(ts), [&](Tape& tape, const std::vector<Var>& v) {
        const std::span<const Var> params(v.data(), v.size() - 1);
        Rng drop(wseed);
        Var h = mlp_forward(params, v.back(), rate, &drop);
        return ad::sum(ad::mul(h, tape.constant(w)));
      });
      track("mlp_forward", gc.error());
    }

    // Decoder w.r.t. its parameters and both embeddings.
    {
      DecoderParams p = DecoderParams::init(d, rng());
      std::vector<Tensor> ts = detail::owned(p.tensors());
      detail::perturb(ts, rng);
      ts.push_back(random_tensor(n, d, rng));
      std::vector<std::uint32_t> u(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = static_cast<std::uint32_t>(random_size(rng, 0, n - 1));
        v[i] = static_cast<std::uint32_t>(random_size(rng, 0, n - 1));
      }
      const Tensor w = random_tensor(n, 1, rng);
      const auto gc = grad_check(pointers(ts), [&](Tape& tape, const std::vector<Var>& vars) {
        const std::span<const Var> params(vars.data(), vars.size() - 1);
        return ad::sum(ad::mul(ad::sigmoid(decode_logits(params, vars.back(), u, v)), tape.constant(w)));
      });
      track("decode", gc.error());
    }

    const std::vector<double> labels = detail::labels_for(n, rng);
    const std::vector<double> teacher_probs = random_vector(n, rng, 0.05, 0.95);
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

    // Supervised loss on probabilities and on logits.
    {
      std::vector<Tensor> ts{random_tensor(n, 1, rng, -3, 3)};
      track("loss_sup", grad_check(pointers(ts), [&](Tape&, const std::vector<Var>& v) {
                          return loss_sup(ad::sigmoid(v[0]), labels);
                        }).error());
      track("loss_sup_logits", grad_check(pointers(ts), [&](Tape&, const std::vector<Var>& v) {
                                 return loss_sup_logits(v[0], labels);
                               }).error());
    }

    // Logit matching, both match kinds.
    for (MatchKind kind : {MatchKind::kMse, MatchKind::kCosine}) {
      std::vector<Tensor> ts{random_tensor(n, 1, rng, -3, 3)};
      const auto gc = grad_check(pointers(ts), [&](Tape&, const std::vector<Var>& v) {
        return loss_logit_match(ad::sigmoid(v[0]), teacher_probs, labels, lambda, kind);
      });
      track("loss_logit_match_" + to_string(kind), gc.error());
    }

    // Representation matching, both match kinds.
    for (MatchKind kind : {MatchKind::kMse, MatchKind::kCosine}) {
      const Tensor teacher_h = random_tensor(n, d, rng);
      std::vector<Tensor> ts{random_tensor(n, d, rng), random_tensor(n, 1, rng, -3, 3)};
      const auto gc = grad_check(pointers(ts), [&](Tape&, const std::vector<Var>& v) {
        return loss_repr_match(v[0], teacher_h, ad::sigmoid(v[1]), labels, lambda, kind);
      });
      track("loss_repr_match_" + to_string(kind), gc.error());
    }

    // Relational terms over random anchor segmentations.
    const std::vector<std::size_t> offsets = detail::random_offsets(random_size(rng, 1, 4), rng);
    const std::size_t m = offsets.back();
    const std::vector<double> teacher_scores = random_vector(m, rng, 0.0, 1.0);
    const double delta = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
    const double tau = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
    {
      std::vector<Tensor> ts{random_tensor(m, 1, rng, -3, 3)};
      track("loss_rank", grad_check(pointers(ts), [&](Tape&, const std::vector<Var>& v) {
                           return loss_rank(ad::sigmoid(v[0]), teacher_scores, offsets, delta).value;
                         }).error());
      track("loss_dist", grad_check(pointers(ts), [&](Tape&, const std::vector<Var>& v) {
                           return loss_dist(ad::sigmoid(v[0]), teacher_scores, offsets, tau).value;
                         }).error());
    }

    // Full relational objective through a student MLP and decoder.
    {
      StudentModel s = StudentModel::init(f, d, layers, rng());
      std::vector<Tensor> ts = detail::owned(s.encoder.tensors());
      const std::size_t n_enc = ts.size();
      for (Tensor* t : s.decoder.tensors()) ts.push_back(*t);
      detail::perturb(ts, rng);
      const Tensor x = random_tensor(n, f, rng);
      std::vector<std::uint32_t> u(m), v(m);
      for (std::size_t i = 0; i < m; ++i) {
        u[i] = static_cast<std::uint32_t>(random_size(rng, 0, n - 1));
        v[i] = static_cast<std::uint32_t>(random_size(rng, 0, n - 1));
      }
      const std::vector<double> pair_labels = detail::labels_for(m, rng);
      const double alpha = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      const double beta = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      const double gamma = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      const auto gc = grad_check(pointers(ts), [&](Tape& tape, const std::vector<Var>& vars) {
        const std::span<const Var> enc(vars.data(), n_enc);
        const std::span<const Var> dec(vars.data() + n_enc, vars.size() - n_enc);
        Var h = mlp_forward(enc, tape.constant(x), 0.0, nullptr);
        Var probs = ad::sigmoid(decode_logits(dec, h, u, v));
        Var sup = loss_sup(probs, pair_labels);
        return loss_total(sup, loss_rank(probs, teacher_scores, offsets, delta).value,
                          loss_dist(probs, teacher_scores, offsets, tau).value, alpha, beta, gamma);
      });
      track("loss_total", gc.error());
    }
  }
  return out;
}

}  // namespace llp::testing
