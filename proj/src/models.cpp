#include "llp/models.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <type_traits>

#include "llp/errors.hpp"

namespace llp {

namespace {

Tensor xavier(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w(in, out);
  for (double& x : w.values()) x = dist(rng);
  return w;
}

std::uint64_t init_seed(std::uint64_t seed, InitSlot slot) {
  return derive_seed(seed, Stream::kInit, static_cast<std::uint64_t>(slot));
}

template <class T>
std::vector<const Tensor*> as_const(std::vector<T*> v) {
  return {v.begin(), v.end()};
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter containers

SageParams SageParams::init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed) {
  if (layers == 0 || in_dim == 0 || hidden == 0) throw ParameterError("SAGE needs at least one layer and width");
  Rng rng(seed);
  SageParams p;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = l == 0 ? in_dim : hidden;
    p.w_self.push_back(xavier(in, hidden, rng));
    p.w_neigh.push_back(xavier(in, hidden, rng));
    p.bias.emplace_back(1, hidden);
  }
  return p;
}

std::size_t SageParams::in_dim() const { return w_self.empty() ? 0 : w_self.front().rows(); }
std::size_t SageParams::out_dim() const { return w_self.empty() ? 0 : w_self.back().cols(); }

std::vector<Tensor*> SageParams::tensors() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    out.push_back(&w_self[l]);
    out.push_back(&w_neigh[l]);
    out.push_back(&bias[l]);
  }
  return out;
}

std::vector<const Tensor*> SageParams::tensors() const { return as_const(const_cast<SageParams*>(this)->tensors()); }

MlpParams MlpParams::init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed) {
  if (layers == 0 || in_dim == 0 || hidden == 0) throw ParameterError("MLP needs at least one layer and width");
  Rng rng(seed);
  MlpParams p;
  for (std::size_t l = 0; l < layers; ++l) {
    p.weight.push_back(xavier(l == 0 ? in_dim : hidden, hidden, rng));
    p.bias.emplace_back(1, hidden);
  }
  return p;
}

std::size_t MlpParams::in_dim() const { return weight.empty() ? 0 : weight.front().rows(); }
std::size_t MlpParams::out_dim() const { return weight.empty() ? 0 : weight.back().cols(); }

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    out.push_back(&weight[l]);
    out.push_back(&bias[l]);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const { return as_const(const_cast<MlpParams*>(this)->tensors()); }

DecoderParams DecoderParams::init(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ParameterError("decoder width must be positive");
  Rng rng(seed);
  DecoderParams p;
  p.w1 = xavier(dim, dim, rng);
  p.b1 = Tensor(1, dim);
  p.w2 = xavier(dim, 1, rng);
  p.b2 = Tensor(1, 1);
  return p;
}

std::vector<Tensor*> DecoderParams::tensors() { return {&w1, &b1, &w2, &b2}; }
std::vector<const Tensor*> DecoderParams::tensors() const { return {&w1, &b1, &w2, &b2}; }

TeacherModel TeacherModel::init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed) {
  return {SageParams::init(in_dim, hidden, layers, init_seed(seed, InitSlot::kTeacherEncoder)),
          DecoderParams::init(hidden, init_seed(seed, InitSlot::kTeacherDecoder)), seed};
}

StudentModel StudentModel::init(std::size_t in_dim, std::size_t hidden, std::size_t layers, std::uint64_t seed) {
  return {MlpParams::init(in_dim, hidden, layers, init_seed(seed, InitSlot::kStudentEncoder)),
          DecoderParams::init(hidden, init_seed(seed, InitSlot::kStudentDecoder)), seed, "mlp"};
}

namespace {
bool same_tensors(const std::vector<const Tensor*>& a, const std::vector<const Tensor*>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(*a[i] == *b[i])) return false;
  }
  return true;
}
}  // namespace

bool operator==(const SageParams& a, const SageParams& b) { return same_tensors(a.tensors(), b.tensors()); }
bool operator==(const MlpParams& a, const MlpParams& b) { return same_tensors(a.tensors(), b.tensors()); }
bool operator==(const DecoderParams& a, const DecoderParams& b) { return same_tensors(a.tensors(), b.tensors()); }

// ---------------------------------------------------------------------------
// Tape path

std::vector<Var> bind_params(Tape& tape, std::span<const Tensor* const> params, bool trainable) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const Tensor* t : params) out.push_back(trainable ? tape.leaf(*t) : tape.constant(*t));
  return out;
}

namespace {

void require_width(const Tape& tape, Var x, Var w, const char* what) {
  if (tape.value(x).cols() != tape.value(w).rows()) {
    throw DimensionError(std::string(what) + ": input width " + std::to_string(tape.value(x).cols()) +
                         " does not match layer width " + std::to_string(tape.value(w).rows()));
  }
}

Var hidden_dropout(Var h, double rate, Rng* rng) {
  if (rate == 0.0) return h;
  if (!rng) throw UsageError("dropout requires an rng");
  return ad::dropout(h, rate, *rng);
}

}  // namespace

Var sage_forward(std::span<const Var> params, Var x, const kernels::CsrView& graph, double dropout, Rng* rng) {
  if (params.empty() || params.size() % 3 != 0) throw UsageError("sage_forward: expected 3 tensors per layer");
  if (x.tape->value(x).rows() != graph.num_nodes()) throw DimensionError("sage_forward: feature rows != nodes");
  require_width(*x.tape, x, params[0], "sage_forward");
  const std::size_t layers = params.size() / 3;
  Var h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    // mean(H) W == mean(H W); aggregating after the projection is cheaper.
    Var self = ad::matmul(h, params[3 * l]);
    Var neigh = ad::mean_neighbors(ad::matmul(h, params[3 * l + 1]), graph);
    h = ad::add_bias(ad::add(self, neigh), params[3 * l + 2]);
    if (l + 1 < layers) h = hidden_dropout(ad::relu(h), dropout, rng);
  }
  return h;
}

Var mlp_forward(std::span<const Var> params, Var x, double dropout, Rng* rng) {
  if (params.empty() || params.size() % 2 != 0) throw UsageError("mlp_forward: expected 2 tensors per layer");
  require_width(*x.tape, x, params[0], "mlp_forward");
  const std::size_t layers = params.size() / 2;
  Var h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::add_bias(ad::matmul(h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 < layers) h = hidden_dropout(ad::relu(h), dropout, rng);
  }
  return h;
}

Var decode_logits(std::span<const Var> params, Var h, std::span<const std::uint32_t> u,
                  std::span<const std::uint32_t> v) {
  if (params.size() != 4) throw UsageError("decode_logits: expected 4 decoder tensors");
  require_width(*h.tape, h, params[0], "decode_logits");
  Var z = ad::pair_hadamard(h, u, v);
  Var a = ad::relu(ad::add_bias(ad::matmul(z, params[0]), params[1]));
  return ad::add_bias(ad::matmul(a, params[2]), params[3]);
}

// ---------------------------------------------------------------------------
// Plain path

namespace {

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.cols());
  kernels::gemm_nn(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols(), false);
  return out;
}

// Same operation order as the tape path: (self + neigh) then + bias.
void finish_layer(Tensor& self, const Tensor& neigh, const Tensor& bias, bool relu) {
  self += neigh;
  const std::size_t n = self.cols();
  for (std::size_t r = 0; r < self.rows(); ++r) {
    double* row = self.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) {
      row[c] += bias[c];
      if (relu && row[c] < 0.0) row[c] = 0.0;
    }
  }
}

void require_in_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": input width " + std::to_string(got) + " does not match layer width " +
                         std::to_string(want));
  }
}

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor sage_embed(const SageParams& p, const Graph& g) {
  require_in_dim(g.num_features(), p.in_dim(), "sage_embed");
  const auto csr = g.csr();
  Tensor h = g.features();
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    Tensor self = matmul(h, p.w_self[l]);
    Tensor projected = matmul(h, p.w_neigh[l]);
    Tensor neigh(projected.rows(), projected.cols());
    kernels::mean_aggregate(csr, projected.data(), neigh.data(), projected.cols());
    finish_layer(self, neigh, p.bias[l], l + 1 < p.num_layers());
    h = std::move(self);
  }
  return h;
}

Tensor sage_embed_nodes(const SageParams& p, const Graph& g, std::span<const NodeId> targets, SageWorkspace& ws) {
  require_in_dim(g.num_features(), p.in_dim(), "sage_embed_nodes");
  if (ws.local_.size() != g.num_nodes()) throw DimensionError("sage_embed_nodes: workspace sized for another graph");
  const std::size_t layers = p.num_layers();

  // order[0, count[l]) holds the nodes whose layer-l state is needed; each
  // set extends the next one, so a single local index serves every layer.
  std::vector<NodeId> order;
  std::vector<std::size_t> count(layers + 1);
  for (NodeId v : targets) {
    if (v >= g.num_nodes()) throw DimensionError("sage_embed_nodes: node out of range");
    if (ws.local_[v] == SageWorkspace::kUnset) {
      ws.local_[v] = static_cast<std::uint32_t>(order.size());
      order.push_back(v);
    }
  }
  count[layers] = order.size();
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t frontier = count[l + 1];
    for (std::size_t i = 0; i < frontier; ++i) {
      for (NodeId w : g.neighbors(order[i])) {
        if (ws.local_[w] == SageWorkspace::kUnset) {
          ws.local_[w] = static_cast<std::uint32_t>(order.size());
          order.push_back(w);
        }
      }
    }
    count[l] = order.size();
  }

  const Tensor& x = g.features();
  Tensor h(order.size(), x.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy(x.row(order[i]).begin(), x.row(order[i]).end(), h.row(i).begin());
  }

  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = count[l];
    const std::size_t n_out = count[l + 1];
    const std::size_t in_w = h.cols();
    const std::size_t out_w = p.w_self[l].cols();
    Tensor self(n_out, out_w);
    kernels::gemm_nn(h.data(), p.w_self[l].data(), self.data(), n_out, in_w, out_w, false);
    Tensor projected(n_in, out_w);
    kernels::gemm_nn(h.data(), p.w_neigh[l].data(), projected.data(), n_in, in_w, out_w, false);
    Tensor neigh(n_out, out_w);
    for (std::size_t i = 0; i < n_out; ++i) {
      const auto nbrs = g.neighbors(order[i]);
      if (nbrs.empty()) continue;
      double* o = neigh.data() + i * out_w;
      for (NodeId w : nbrs) {
        const double* src = projected.data() + static_cast<std::size_t>(ws.local_[w]) * out_w;
        for (std::size_t c = 0; c < out_w; ++c) o[c] += src[c];
      }
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (std::size_t c = 0; c < out_w; ++c) o[c] *= inv;
    }
    finish_layer(self, neigh, p.bias[l], l + 1 < layers);
    h = std::move(self);
  }

  Tensor out(targets.size(), h.cols());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const auto src = h.row(ws.local_[targets[r]]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  for (NodeId v : order) ws.local_[v] = SageWorkspace::kUnset;
  return out;
}

Tensor mlp_embed(const MlpParams& p, const Tensor& x) {
  require_in_dim(x.cols(), p.in_dim(), "mlp_embed");
  Tensor h = x;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    Tensor next = matmul(h, p.weight[l]);
    finish_layer(next, Tensor(next.rows(), next.cols()), p.bias[l], l + 1 < p.num_layers());
    h = std::move(next);
  }
  return h;
}

Tensor mlp_embed_rows(const MlpParams& p, const Tensor& x, std::span<const NodeId> rows) {
  require_in_dim(x.cols(), p.in_dim(), "mlp_embed_rows");
  Tensor sub(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.rows()) throw DimensionError("mlp_embed_rows: row out of range");
    std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), sub.row(r).begin());
  }
  return mlp_embed(p, sub);
}

std::vector<double> decode(const DecoderParams& p, const Tensor& h, std::span<const std::uint32_t> u,
                           std::span<const std::uint32_t> v) {
  require_in_dim(h.cols(), p.in_dim(), "decode");
  if (u.size() != v.size()) throw DimensionError("decode: endpoint lists differ in length");
  for (std::size_t r = 0; r < u.size(); ++r) {
    if (u[r] >= h.rows() || v[r] >= h.rows()) throw DimensionError("decode: row out of range");
  }
  Tensor z(u.size(), h.cols());
  kernels::pair_hadamard(h.data(), h.cols(), u, v, z.data());
  Tensor a = matmul(z, p.w1);
  finish_layer(a, Tensor(a.rows(), a.cols()), p.b1, true);
  Tensor logit = matmul(a, p.w2);
  std::vector<double> out(u.size());
  for (std::size_t r = 0; r < u.size(); ++r) out[r] = stable_sigmoid(logit[r] + p.b2[0]);
  return out;
}

double decode(const DecoderParams& p, std::span<const double> hu, std::span<const double> hv) {
  if (hu.size() != hv.size()) throw DimensionError("decode: embedding widths differ");
  Tensor h(2, hu.size());
  std::copy(hu.begin(), hu.end(), h.row(0).begin());
  std::copy(hv.begin(), hv.end(), h.row(1).begin());
  const std::uint32_t u = 0, v = 1;
  return decode(p, h, {&u, 1}, {&v, 1})[0];
}

std::vector<double> score_pairs(const DecoderParams& p, const Tensor& embeddings, const EdgeSet& pairs) {
  std::vector<std::uint32_t> u, v;
  u.reserve(pairs.size());
  v.reserve(pairs.size());
  for (const auto& e : pairs) {
    u.push_back(e.u);
    v.push_back(e.v);
  }
  return decode(p, embeddings, u, v);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointMagic = "llp-checkpoint 1";

void write_tensor(std::ostream& out, const Tensor& t) {
  out << "tensor " << t.rows() << ' ' << t.cols() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, t[i]);
    if (i) out << ' ';
    out.write(buf, p - buf);
  }
  out << '\n';
}

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!in_) throw LoadError(path_, 0, "cannot open checkpoint");
    if (next_line() != kCheckpointMagic) throw LoadError(path_, line_, "not a checkpoint");
  }

  std::string next_line() {
    std::string s;
    if (!std::getline(in_, s)) throw LoadError(path_, line_ + 1, "unexpected end of checkpoint");
    ++line_;
    return s;
  }

  // "key v1 v2 ..." -> values; key must match.
  std::vector<std::string> field(const std::string& key) {
    std::istringstream ls(next_line());
    std::string k;
    ls >> k;
    if (k != key) throw LoadError(path_, line_, "expected '" + key + "'");
    std::vector<std::string> vals;
    for (std::string v; ls >> v;) vals.push_back(v);
    return vals;
  }

  std::uint64_t number(const std::string& s) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) throw LoadError(path_, line_, "bad integer '" + s + "'");
    return x;
  }

  void read_tensor(Tensor& into) {
    const auto shape = field("tensor");
    if (shape.size() != 2 || number(shape[0]) != into.rows() || number(shape[1]) != into.cols()) {
      throw LoadError(path_, line_, "tensor shape does not match the declared architecture");
    }
    const std::string data = next_line();
    const char* p = data.data();
    const char* end = data.data() + data.size();
    for (std::size_t i = 0; i < into.size(); ++i) {
      while (p < end && *p == ' ') ++p;
      auto [q, ec] = std::from_chars(p, end, into[i]);
      if (ec != std::errc()) throw LoadError(path_, line_, "bad real in tensor data");
      p = q;
    }
    while (p < end && *p == ' ') ++p;
    if (p != end) throw LoadError(path_, line_, "extra values in tensor data");
  }

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError(path.string(), 0, "cannot write checkpoint");
  return out;
}

void write_dims(std::ostream& out, std::size_t in, std::size_t hidden, std::size_t layers) {
  out << "encoder_dims " << in << ' ' << hidden << ' ' << layers << '\n';
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TeacherModel& m) {
  auto out = open_out(path);
  out << kCheckpointMagic << '\n' << "model teacher\n" << "seed " << m.seed << '\n';
  write_dims(out, m.encoder.in_dim(), m.encoder.out_dim(), m.encoder.num_layers());
  for (const Tensor* t : m.encoder.tensors()) write_tensor(out, *t);
  for (const Tensor* t : m.decoder.tensors()) write_tensor(out, *t);
  if (!out) throw LoadError(path.string(), 0, "write failed");
}

void save_checkpoint(const std::filesystem::path& path, const StudentModel& m) {
  auto out = open_out(path);
  out << kCheckpointMagic << '\n' << "model student\n" << "seed " << m.seed << '\n' << "method " << m.method << '\n';
  write_dims(out, m.encoder.in_dim(), m.encoder.out_dim(), m.encoder.num_layers());
  for (const Tensor* t : m.encoder.tensors()) write_tensor(out, *t);
  for (const Tensor* t : m.decoder.tensors()) write_tensor(out, *t);
  if (!out) throw LoadError(path.string(), 0, "write failed");
}

namespace {

template <class Model>
Model load_model(const std::filesystem::path& path, const std::string& kind) {
  CheckpointReader r(path);
  const auto model = r.field("model");
  if (model.size() != 1 || model[0] != kind) throw LoadError(r.path(), r.line(), "checkpoint is not a " + kind);
  const auto seed = r.field("seed");
  if (seed.size() != 1) throw LoadError(r.path(), r.line(), "bad seed line");
  std::string method;
  if constexpr (std::is_same_v<Model, StudentModel>) {
    const auto m = r.field("method");
    if (m.size() != 1) throw LoadError(r.path(), r.line(), "bad method line");
    method = m[0];
  }
  const auto dims = r.field("encoder_dims");
  if (dims.size() != 3) throw LoadError(r.path(), r.line(), "bad encoder_dims line");
  const std::size_t in = r.number(dims[0]), hidden = r.number(dims[1]), layers = r.number(dims[2]);
  if (in == 0 || hidden == 0 || layers == 0) throw LoadError(r.path(), r.line(), "zero-sized architecture");
  Model m = Model::init(in, hidden, layers, 0);
  m.seed = r.number(seed[0]);
  if constexpr (std::is_same_v<Model, StudentModel>) m.method = method;
  for (Tensor* t : m.encoder.tensors()) r.read_tensor(*t);
  for (Tensor* t : m.decoder.tensors()) r.read_tensor(*t);
  return m;
}

}  // namespace

TeacherModel load_teacher(const std::filesystem::path& path) { return load_model<TeacherModel>(path, "teacher"); }
StudentModel load_student(const std::filesystem::path& path) { return load_model<StudentModel>(path, "student"); }

}  // namespace llp
