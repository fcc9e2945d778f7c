#include "llp/splits.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "llp/errors.hpp"

namespace llp {

std::size_t fraction_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

bool ProductionSplit::is_new(NodeId v) const { return std::binary_search(new_nodes.begin(), new_nodes.end(), v); }

namespace {

EdgeSet take(const std::vector<Edge>& edges, std::size_t begin, std::size_t end) {
  EdgeSet s;
  for (std::size_t i = begin; i < end; ++i) s.push(edges[i].u, edges[i].v, 1);
  return s;
}

void split_negatives(const EdgeSet& all, std::size_t first, EdgeSet& a, EdgeSet& b) {
  for (std::size_t i = 0; i < all.size(); ++i) (i < first ? a : b).push(all[i].u, all[i].v, 0);
}

std::vector<Edge> concat_edges(std::initializer_list<const EdgeSet*> sets) {
  std::vector<Edge> out;
  for (const EdgeSet* s : sets)
    for (const auto& e : *s) out.push_back(e.edge());
  return out;
}

}  // namespace

TransductiveSplit transductive_split(const Graph& g, double val_frac, double test_frac, std::uint64_t seed) {
  if (!(val_frac >= 0.0) || !(test_frac >= 0.0) || !(val_frac + test_frac < 1.0)) {
    throw ParameterError("transductive split needs 0 <= val_frac, test_frac and val_frac + test_frac < 1");
  }
  Rng rng = make_rng(seed, Stream::kSplit);
  std::vector<Edge> edges = g.edges();
  std::shuffle(edges.begin(), edges.end(), rng);
  const std::size_t n_test = fraction_count(test_frac, edges.size());
  const std::size_t n_val = fraction_count(val_frac, edges.size());

  TransductiveSplit s;
  s.seed = seed;
  s.val_frac = val_frac;
  s.test_frac = test_frac;
  s.test.pos = take(edges, 0, n_test);
  s.val.pos = take(edges, n_test, n_test + n_val);
  s.train_pos = take(edges, n_test + n_val, edges.size());

  const EdgeSet negs = sample_negatives(g, n_val + n_test, EdgeSet{}, rng);
  split_negatives(negs, n_val, s.val.neg, s.test.neg);
  const auto train_edges = s.train_pos.edges();
  s.message_graph = g.with_edges(train_edges);
  return s;
}

ProductionSplit production_split(const Graph& g, double new_frac, std::uint64_t seed, double val_frac) {
  if (!(new_frac > 0.0 && new_frac < 1.0)) throw ParameterError("new_frac must be in (0, 1)");
  if (!(val_frac >= 0.0 && val_frac < 1.0)) throw ParameterError("production val_frac must be in [0, 1)");
  Rng rng = make_rng(seed, Stream::kSplit);

  ProductionSplit s;
  s.seed = seed;
  s.new_frac = new_frac;
  s.val_frac = val_frac;

  std::vector<NodeId> nodes(g.num_nodes());
  for (NodeId v = 0; v < nodes.size(); ++v) nodes[v] = v;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const std::size_t n_new = fraction_count(new_frac, nodes.size());
  s.new_nodes.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(n_new));
  s.existing_nodes.assign(nodes.begin() + static_cast<std::ptrdiff_t>(n_new), nodes.end());
  std::sort(s.new_nodes.begin(), s.new_nodes.end());
  std::sort(s.existing_nodes.begin(), s.existing_nodes.end());

  std::vector<std::uint8_t> is_new(g.num_nodes(), 0);
  for (NodeId v : s.new_nodes) is_new[v] = 1;

  std::vector<Edge> ee, en, nn;
  for (const Edge& e : g.edges()) {
    const int k = is_new[e.u] + is_new[e.v];
    (k == 0 ? ee : k == 1 ? en : nn).push_back(e);
  }
  std::shuffle(ee.begin(), ee.end(), rng);
  std::shuffle(en.begin(), en.end(), rng);
  std::shuffle(nn.begin(), nn.end(), rng);

  // E-E: 10% test, 10% message, remainder train (validation carved from it).
  const std::size_t ee_test = fraction_count(0.10, ee.size());
  const std::size_t ee_msg = fraction_count(0.10, ee.size());
  const std::size_t ee_train = ee.size() - ee_test - ee_msg;
  const std::size_t n_val = fraction_count(val_frac, ee_train);
  s.test_ee.pos = take(ee, 0, ee_test);
  s.ee_message = take(ee, ee_test, ee_test + ee_msg);
  s.val.pos = take(ee, ee_test + ee_msg, ee_test + ee_msg + n_val);
  s.train_pos = take(ee, ee_test + ee_msg + n_val, ee.size());

  const std::size_t en_test = fraction_count(0.10, en.size());
  s.test_en.pos = take(en, 0, en_test);
  s.en_message = take(en, en_test, en.size());
  const std::size_t nn_test = fraction_count(0.10, nn.size());
  s.test_nn.pos = take(nn, 0, nn_test);
  s.nn_message = take(nn, nn_test, nn.size());

  if (s.train_pos.empty()) s.warnings.push_back("degenerate split: empty E-E training set");
  if (s.test_nn.pos.empty()) s.warnings.push_back("N-N test stratum is empty");
  if (s.test_en.pos.empty()) s.warnings.push_back("E-N test stratum is empty");

  // Negatives per stratum, drawn from that stratum's node pools.
  const EdgeSet all_neg_ee = sample_negatives(g, s.val.pos.size() + s.test_ee.pos.size(), EdgeSet{}, rng,
                                              s.existing_nodes);
  split_negatives(all_neg_ee, s.val.pos.size(), s.val.neg, s.test_ee.neg);
  s.test_en.neg = sample_negatives(g, s.test_en.pos.size(), EdgeSet{}, rng, s.existing_nodes, s.new_nodes);
  s.test_nn.neg = sample_negatives(g, s.test_nn.pos.size(), EdgeSet{}, rng, s.new_nodes);

  s.train_message_graph = g.with_edges(s.train_pos.edges());
  s.inference_message_graph =
      g.with_edges(concat_edges({&s.train_pos, &s.val.pos, &s.ee_message, &s.en_message, &s.nn_message}));
  return s;
}

ColdStartView cold_start_view(const ProductionSplit& ps) {
  ColdStartView view{ps, {}};
  std::vector<Edge> kept;
  for (const Edge& e : ps.inference_message_graph.edges()) {
    if (!ps.is_new(e.u) && !ps.is_new(e.v)) kept.push_back(e);
  }
  view.message_graph = ps.inference_message_graph.with_edges(kept);
  return view;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_pairs(const EdgeSet& s, const Graph& g, const std::string& name, bool positive,
                 std::vector<std::string>& errs) {
  if (!s.in_range(g.num_nodes())) errs.push_back(name + ": endpoint out of range");
  if (s.has_duplicates()) errs.push_back(name + ": duplicate pairs");
  for (const auto& e : s) {
    if (e.label != (positive ? 1 : 0)) {
      errs.push_back(name + ": wrong label");
      break;
    }
    if (e.u < g.num_nodes() && e.v < g.num_nodes() && g.has_edge(e.u, e.v) != positive) {
      errs.push_back(name + (positive ? ": positive is not an edge" : ": negative is an edge"));
      break;
    }
  }
}

void check_absent(const EdgeSet& s, const Graph& mg, const std::string& what, std::vector<std::string>& errs) {
  for (const auto& e : s) {
    if (mg.has_edge(e.u, e.v)) {
      errs.push_back("leakage: " + what);
      return;
    }
  }
}

// Every original edge must land in exactly one of the positive buckets.
void check_partition(const Graph& g, std::initializer_list<const EdgeSet*> buckets, std::vector<std::string>& errs) {
  std::unordered_set<std::uint64_t> seen;
  std::size_t total = 0;
  for (const EdgeSet* b : buckets) {
    for (const auto& e : *b) {
      ++total;
      if (!seen.insert(e.edge().key()).second) {
        errs.push_back("partition: edge in more than one bucket");
        return;
      }
    }
  }
  if (total != g.num_edges()) errs.push_back("partition: buckets do not cover every edge");
}

void check_disjoint(const EdgeSet& a, const EdgeSet& b, const std::string& what, std::vector<std::string>& errs) {
  const auto ka = a.keys();
  for (const auto& e : b) {
    if (ka.count(e.edge().key())) {
      errs.push_back(what + " overlap");
      return;
    }
  }
}

}  // namespace

std::vector<std::string> validate_split(const TransductiveSplit& s, const Graph& g) {
  std::vector<std::string> errs;
  check_pairs(s.train_pos, g, "train_pos", true, errs);
  check_pairs(s.val.pos, g, "val_pos", true, errs);
  check_pairs(s.test.pos, g, "test_pos", true, errs);
  check_pairs(s.val.neg, g, "val_neg", false, errs);
  check_pairs(s.test.neg, g, "test_neg", false, errs);
  check_partition(g, {&s.train_pos, &s.val.pos, &s.test.pos}, errs);
  check_disjoint(s.val.neg, s.test.neg, "val/test negatives", errs);
  if (s.val.pos.size() != s.val.neg.size()) errs.push_back("val negatives not matched");
  if (s.test.pos.size() != s.test.neg.size()) errs.push_back("test negatives not matched");
  check_absent(s.val.pos, s.message_graph, "validation edge in message graph", errs);
  check_absent(s.test.pos, s.message_graph, "test edge in message graph", errs);
  if (s.message_graph.num_edges() != s.train_pos.size()) errs.push_back("message graph differs from train_pos");
  return errs;
}

std::vector<std::string> validate_split(const ProductionSplit& s, const Graph& g) {
  std::vector<std::string> errs;
  check_pairs(s.train_pos, g, "train_pos", true, errs);
  check_pairs(s.val.pos, g, "val_pos", true, errs);
  check_pairs(s.val.neg, g, "val_neg", false, errs);
  for (const auto* st : {&s.test_ee, &s.test_en, &s.test_nn}) {
    check_pairs(st->pos, g, "test_pos", true, errs);
    check_pairs(st->neg, g, "test_neg", false, errs);
    if (st->pos.size() != st->neg.size()) errs.push_back("test negatives not matched");
    check_absent(st->pos, s.train_message_graph, "test edge in training message graph", errs);
    check_absent(st->pos, s.inference_message_graph, "test edge in inference message graph", errs);
  }
  check_partition(g, {&s.train_pos, &s.val.pos, &s.ee_message, &s.en_message, &s.nn_message, &s.test_ee.pos,
                      &s.test_en.pos, &s.test_nn.pos},
                  errs);
  check_disjoint(s.test_ee.pos, s.test_en.pos, "test strata", errs);
  check_disjoint(s.test_ee.pos, s.test_nn.pos, "test strata", errs);
  check_disjoint(s.test_en.pos, s.test_nn.pos, "test strata", errs);
  check_disjoint(s.val.neg, s.test_ee.neg, "val/test negatives", errs);
  check_absent(s.val.pos, s.train_message_graph, "validation edge in training message graph", errs);

  if (s.existing_nodes.size() + s.new_nodes.size() != g.num_nodes()) errs.push_back("node partition incomplete");
  auto category = [&](const LabeledEdge& e) { return int(s.is_new(e.u)) + int(s.is_new(e.v)); };
  auto expect = [&](const EdgeSet& set, int k, const std::string& name) {
    for (const auto& e : set) {
      if (category(e) != k) {
        errs.push_back(name + ": pair in the wrong stratum");
        return;
      }
    }
  };
  expect(s.train_pos, 0, "train_pos");
  expect(s.val.pos, 0, "val_pos");
  expect(s.val.neg, 0, "val_neg");
  expect(s.ee_message, 0, "ee_message");
  expect(s.test_ee.pos, 0, "test_ee");
  expect(s.test_ee.neg, 0, "test_ee_neg");
  expect(s.en_message, 1, "en_message");
  expect(s.test_en.pos, 1, "test_en");
  expect(s.test_en.neg, 1, "test_en_neg");
  expect(s.nn_message, 2, "nn_message");
  expect(s.test_nn.pos, 2, "test_nn");
  expect(s.test_nn.neg, 2, "test_nn_neg");
  for (NodeId v : s.new_nodes) {
    if (s.train_message_graph.degree(v) != 0) {
      errs.push_back("new node visible in the training message graph");
      break;
    }
  }
  if (s.train_message_graph.num_edges() != s.train_pos.size()) errs.push_back("training message graph != train_pos");
  const std::size_t expected_inference =
      s.train_pos.size() + s.val.pos.size() + s.ee_message.size() + s.en_message.size() + s.nn_message.size();
  if (s.inference_message_graph.num_edges() != expected_inference) errs.push_back("inference message graph size");
  return errs;
}

std::vector<std::string> validate_split(const ColdStartView& v, const Graph& g) {
  std::vector<std::string> errs = validate_split(v.split, g);
  for (NodeId n : v.split.new_nodes) {
    if (v.message_graph.degree(n) != 0) {
      errs.push_back("cold start: new node has neighbors");
      break;
    }
  }
  for (const auto* st : {&v.split.test_ee, &v.split.test_en, &v.split.test_nn}) {
    check_absent(st->pos, v.message_graph, "test edge in cold-start message graph", errs);
  }
  return errs;
}

// ---------------------------------------------------------------------------
// Manifest IO

namespace {

constexpr const char* kMagic = "# llp split manifest v1";

std::string format_real(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

void write_bucket(std::ostream& out, const char* name, const EdgeSet& s) {
  for (const auto& e : s) out << name << ' ' << e.u << ' ' << e.v << ' ' << int(e.label) << '\n';
}

struct Parsed {
  std::map<std::string, std::string> header;
  std::vector<NodeId> new_nodes;
  std::map<std::string, EdgeSet> buckets;
};

}  // namespace

void write_manifest(std::ostream& out, const AnySplit& split) {
  out << kMagic << '\n';
  if (const auto* t = std::get_if<TransductiveSplit>(&split)) {
    out << "kind transductive\n";
    out << "seed " << t->seed << '\n';
    out << "num_nodes " << t->message_graph.num_nodes() << '\n';
    out << "val_frac " << format_real(t->val_frac) << '\n';
    out << "test_frac " << format_real(t->test_frac) << '\n';
    write_bucket(out, "train_pos", t->train_pos);
    write_bucket(out, "val_pos", t->val.pos);
    write_bucket(out, "val_neg", t->val.neg);
    write_bucket(out, "test_pos", t->test.pos);
    write_bucket(out, "test_neg", t->test.neg);
    return;
  }
  const auto& p = std::get<ProductionSplit>(split);
  out << "kind production\n";
  out << "seed " << p.seed << '\n';
  out << "num_nodes " << p.train_message_graph.num_nodes() << '\n';
  out << "new_frac " << format_real(p.new_frac) << '\n';
  out << "val_frac " << format_real(p.val_frac) << '\n';
  out << "existing_nodes " << p.existing_nodes.size() << '\n';
  out << "new_nodes " << p.new_nodes.size() << '\n';
  for (NodeId v : p.new_nodes) out << "new_node " << v << '\n';
  write_bucket(out, "train_pos", p.train_pos);
  write_bucket(out, "val_pos", p.val.pos);
  write_bucket(out, "val_neg", p.val.neg);
  write_bucket(out, "ee_message", p.ee_message);
  write_bucket(out, "en_message", p.en_message);
  write_bucket(out, "nn_message", p.nn_message);
  write_bucket(out, "test_ee_pos", p.test_ee.pos);
  write_bucket(out, "test_ee_neg", p.test_ee.neg);
  write_bucket(out, "test_en_pos", p.test_en.pos);
  write_bucket(out, "test_en_neg", p.test_en.neg);
  write_bucket(out, "test_nn_pos", p.test_nn.pos);
  write_bucket(out, "test_nn_neg", p.test_nn.neg);
}

AnySplit read_manifest(std::istream& in, const Graph& g, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != kMagic) throw LoadError(name, 1, "not a split manifest");
  ++lineno;
  Parsed parsed;
  static const std::unordered_set<std::string> kBuckets = {
      "train_pos",  "val_pos",     "val_neg",     "test_pos",    "test_neg",    "ee_message",  "en_message",
      "nn_message", "test_ee_pos", "test_ee_neg", "test_en_pos", "test_en_neg", "test_nn_pos", "test_nn_neg"};
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (kBuckets.count(key)) {
      std::uint64_t u = 0, v = 0;
      int label = -1;
      if (!(ls >> u >> v >> label) || label < 0 || label > 1 || u >= g.num_nodes() || v >= g.num_nodes() || u == v) {
        throw LoadError(name, lineno, "malformed bucket line");
      }
      parsed.buckets[key].push(static_cast<NodeId>(u), static_cast<NodeId>(v), static_cast<std::uint8_t>(label));
    } else if (key == "new_node") {
      std::uint64_t v = 0;
      if (!(ls >> v) || v >= g.num_nodes()) throw LoadError(name, lineno, "malformed new_node line");
      parsed.new_nodes.push_back(static_cast<NodeId>(v));
    } else {
      std::string value;
      if (!(ls >> value)) throw LoadError(name, lineno, "header line without value");
      parsed.header[key] = value;
    }
  }
  auto header = [&](const std::string& k) -> const std::string& {
    auto it = parsed.header.find(k);
    if (it == parsed.header.end()) throw LoadError(name, 0, "missing header key '" + k + "'");
    return it->second;
  };
  auto real = [&](const std::string& k) {
    const std::string& s = header(k);
    double x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) throw LoadError(name, 0, "bad real for '" + k + "'");
    return x;
  };
  auto integer = [&](const std::string& k) {
    const std::string& s = header(k);
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) throw LoadError(name, 0, "bad integer for '" + k + "'");
    return x;
  };
  if (integer("num_nodes") != g.num_nodes()) throw LoadError(name, 0, "manifest node count differs from the graph");
  auto bucket = [&](const std::string& k) { return parsed.buckets[k]; };

  const std::string& kind = header("kind");
  if (kind == "transductive") {
    TransductiveSplit t;
    t.seed = integer("seed");
    t.val_frac = real("val_frac");
    t.test_frac = real("test_frac");
    t.train_pos = bucket("train_pos");
    t.val = {bucket("val_pos"), bucket("val_neg")};
    t.test = {bucket("test_pos"), bucket("test_neg")};
    t.message_graph = g.with_edges(t.train_pos.edges());
    return t;
  }
  if (kind != "production") throw LoadError(name, 0, "unknown split kind '" + kind + "'");
  ProductionSplit p;
  p.seed = integer("seed");
  p.new_frac = real("new_frac");
  p.val_frac = real("val_frac");
  p.new_nodes = parsed.new_nodes;
  if (p.new_nodes.size() != integer("new_nodes")) throw LoadError(name, 0, "new_node line count mismatch");
  if (!std::is_sorted(p.new_nodes.begin(), p.new_nodes.end())) throw LoadError(name, 0, "new nodes not sorted");
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (!p.is_new(v)) p.existing_nodes.push_back(v);
  }
  if (p.existing_nodes.size() != integer("existing_nodes")) throw LoadError(name, 0, "existing node count mismatch");
  p.train_pos = bucket("train_pos");
  p.val = {bucket("val_pos"), bucket("val_neg")};
  p.ee_message = bucket("ee_message");
  p.en_message = bucket("en_message");
  p.nn_message = bucket("nn_message");
  p.test_ee = {bucket("test_ee_pos"), bucket("test_ee_neg")};
  p.test_en = {bucket("test_en_pos"), bucket("test_en_neg")};
  p.test_nn = {bucket("test_nn_pos"), bucket("test_nn_neg")};
  if (p.train_pos.empty()) p.warnings.push_back("degenerate split: empty E-E training set");
  p.train_message_graph = g.with_edges(p.train_pos.edges());
  p.inference_message_graph =
      g.with_edges(concat_edges({&p.train_pos, &p.val.pos, &p.ee_message, &p.en_message, &p.nn_message}));
  return p;
}

}  // namespace llp
