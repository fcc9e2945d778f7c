#pragma once

// Encoders (mean-aggregator SAGE teacher, row-wise MLP student) and the
// Hadamard-product link decoder shared by both.
//
// Each model has two forward paths: a tape path used for training and a
// plain-kernel path used for evaluation and latency measurement. Both go
// through the same kernels in the same order, so their outputs agree.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "llp/autodiff.hpp"
#include "llp/graph.hpp"
#include "llp/tensor.hpp"

namespace llp {

/// Layer l computes relu?(H W_self + mean_neighbors(H) W_neigh + b); relu is
/// applied between layers, not after the last one.
struct SageParams {
  std::vector<Tensor> w_self;
  std::vector<Tensor> w_neigh;
  std::vector<Tensor> bias;

  /// Xavier-uniform weights, zero biases. Widths: in_dim -> hidden -> ... -> hidden.
  static SageParams init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed);

  std::size_t num_layers() const noexcept { return w_self.size(); }
  std::size_t in_dim() const;
  std::size_t out_dim() const;

  /// Declared order: for each layer w_self, w_neigh, bias.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

struct MlpParams {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;

  static MlpParams init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed);

  std::size_t num_layers() const noexcept { return weight.size(); }
  std::size_t in_dim() const;
  std::size_t out_dim() const;

  /// Declared order: for each layer weight, bias.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

/// logit = relu((h_u * h_v) W1 + b1) W2 + b2, with hidden width = input width.
struct DecoderParams {
  Tensor w1, b1, w2, b2;

  static DecoderParams init(std::size_t dim, std::uint64_t seed);

  std::size_t in_dim() const noexcept { return w1.rows(); }

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

/// Seed-stream indices for parameter initialization.
enum class InitSlot : std::uint64_t {
  kTeacherEncoder = 0,
  kTeacherDecoder = 1,
  kStudentEncoder = 2,
  kStudentDecoder = 3,
  kProjection = 4,
};

struct TeacherModel {
  SageParams encoder;
  DecoderParams decoder;
  std::uint64_t seed = 0;

  static TeacherModel init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed);
};

struct StudentModel {
  MlpParams encoder;
  DecoderParams decoder;
  std::uint64_t seed = 0;
  std::string method = "mlp";

  static StudentModel init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed);
};

// ---------------------------------------------------------------------------
// Tape path

/// Records every tensor on the tape, as leaves when trainable and as
/// constants otherwise. The returned Vars follow the input order.
std::vector<Var> bind_params(Tape& tape, std::span<const Tensor* const> params, bool trainable);

/// params as returned by bind_params(SageParams::tensors()). Throws DimensionError
/// when x's width differs from layer 0. Dropout (rate > 0 requires rng) is
/// applied to hidden activations.
Var sage_forward(std::span<const Var> params, Var x, const kernels::CsrView& graph, double dropout, Rng* rng);

/// params as returned by bind_params(MlpParams::tensors()). Row i of the output
/// depends only on row i of x.
Var mlp_forward(std::span<const Var> params, Var x, double dropout, Rng* rng);

/// Logits (rows x 1) for the pairs (u[r], v[r]) of embedding rows in h.
Var decode_logits(std::span<const Var> params, Var h, std::span<const std::uint32_t> u,
                  std::span<const std::uint32_t> v);

// ---------------------------------------------------------------------------
// Plain path

/// Embeddings of every node of g from g's own features.
Tensor sage_embed(const SageParams& p, const Graph& g);

/// Scratch state reused across sage_embed_nodes calls on one graph.
class SageWorkspace {
 public:
  explicit SageWorkspace(std::size_t num_nodes) : local_(num_nodes, kUnset) {}

 private:
  friend Tensor sage_embed_nodes(const SageParams&, const Graph&, std::span<const NodeId>, SageWorkspace&);
  static constexpr std::uint32_t kUnset = 0xffffffffu;
  std::vector<std::uint32_t> local_;
};

/// Embeddings of the distinct nodes in targets (row r belongs to
/// targets[r]) computed on their L-hop computation subgraph only. Equal to
/// the corresponding rows of sage_embed.
Tensor sage_embed_nodes(const SageParams& p, const Graph& g, std::span<const NodeId> targets, SageWorkspace& ws);

Tensor mlp_embed(const MlpParams& p, const Tensor& x);
/// MLP embeddings of the given feature rows (row r belongs to rows[r]).
Tensor mlp_embed_rows(const MlpParams& p, const Tensor& x, std::span<const NodeId> rows);

/// Link probabilities for pairs of rows of h.
std::vector<double> decode(const DecoderParams& p, const Tensor& h, std::span<const std::uint32_t> u,
                           std::span<const std::uint32_t> v);
/// Single-pair probability.
double decode(const DecoderParams& p, std::span<const double> hu, std::span<const double> hv);

/// Probabilities for arbitrary node pairs from a full embedding table.
std::vector<double> score_pairs(const DecoderParams& p, const Tensor& embeddings, const EdgeSet& pairs);

// ---------------------------------------------------------------------------
// Checkpoints: text header plus every parameter in declared order at
// round-trip precision. Loading restores bit-identical parameters.

void save_checkpoint(const std::filesystem::path& path, const TeacherModel& m);
void save_checkpoint(const std::filesystem::path& path, const StudentModel& m);
TeacherModel load_teacher(const std::filesystem::path& path);
StudentModel load_student(const std::filesystem::path& path);

bool operator==(const SageParams& a, const SageParams& b);
bool operator==(const MlpParams& a, const MlpParams& b);
bool operator==(const DecoderParams& a, const DecoderParams& b);

}  // namespace llp
