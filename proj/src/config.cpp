#include "llp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "llp/errors.hpp"

namespace llp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T x{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw ConfigError("bad value '" + value + "' for " + key);
  }
  return x;
}

template <class T>
std::string format_number(T x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_number<T>(key, trim(item)));
  if (out.empty()) throw ConfigError(key + " needs at least one value");
  return out;
}

template <class T>
std::string format_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Field number_field(const char* key, T RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return format_number(c.*member); },
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

// Field reached through an accessor returning a mutable reference.
template <class T, class Access>
Field nested_number(const char* key, Access access) {
  return {key, [access](const RunConfig& c) { return format_number(access(const_cast<RunConfig&>(c))); },
          [key, access](RunConfig& c, const std::string& v) { access(c) = parse_number<T>(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"data.edges", [](const RunConfig& c) { return c.edges; },
                 [](RunConfig& c, const std::string& v) { c.edges = v; }});
    f.push_back({"data.features", [](const RunConfig& c) { return c.features; },
                 [](RunConfig& c, const std::string& v) { c.features = v; }});
    f.push_back({"split.kind",
                 [](const RunConfig& c) {
                   return std::string(c.split_kind == SplitKind::kTransductive ? "transductive" : "production");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "transductive") c.split_kind = SplitKind::kTransductive;
                   else if (v == "production") c.split_kind = SplitKind::kProduction;
                   else throw ConfigError("split.kind must be transductive or production, got '" + v + "'");
                 }});
    f.push_back(number_field("split.val_frac", &RunConfig::val_frac));
    f.push_back(number_field("split.test_frac", &RunConfig::test_frac));
    f.push_back(number_field("split.new_frac", &RunConfig::new_frac));
    f.push_back(nested_number<std::size_t>("model.layers", [](RunConfig& c) -> auto& { return c.model.layers; }));
    f.push_back(nested_number<std::size_t>("model.hidden", [](RunConfig& c) -> auto& { return c.model.hidden; }));
    f.push_back(nested_number<std::size_t>("model.student_width_mult",
                                           [](RunConfig& c) -> auto& { return c.model.student_width_mult; }));
    f.push_back(nested_number<std::size_t>("train.max_epochs", [](RunConfig& c) -> auto& { return c.train.max_epochs; }));
    f.push_back(nested_number<std::size_t>("train.patience", [](RunConfig& c) -> auto& { return c.train.patience; }));
    f.push_back(nested_number<double>("train.lr", [](RunConfig& c) -> auto& { return c.train.lr; }));
    f.push_back(nested_number<double>("train.dropout", [](RunConfig& c) -> auto& { return c.train.dropout; }));
    f.push_back(nested_number<std::size_t>("train.edge_batch", [](RunConfig& c) -> auto& { return c.train.edge_batch; }));
    f.push_back(
        nested_number<std::size_t>("train.anchor_batch", [](RunConfig& c) -> auto& { return c.train.anchor_batch; }));
    f.push_back(nested_number<std::size_t>("train.hits_k", [](RunConfig& c) -> auto& { return c.train.hits_k; }));
    f.push_back({"train.method", [](const RunConfig& c) { return to_string(c.method); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.method = parse_method(v);
                   } catch (const ParameterError& e) {
                     throw ConfigError(e.what());
                   }
                 }});
    f.push_back(nested_number<double>("loss.lambda", [](RunConfig& c) -> auto& { return c.train.loss.lambda; }));
    f.push_back(nested_number<double>("loss.alpha", [](RunConfig& c) -> auto& { return c.train.loss.alpha; }));
    f.push_back(nested_number<double>("loss.beta", [](RunConfig& c) -> auto& { return c.train.loss.beta; }));
    f.push_back(nested_number<double>("loss.gamma", [](RunConfig& c) -> auto& { return c.train.loss.gamma; }));
    f.push_back(nested_number<double>("loss.delta", [](RunConfig& c) -> auto& { return c.train.loss.delta; }));
    f.push_back(nested_number<double>("loss.tau", [](RunConfig& c) -> auto& { return c.train.loss.tau; }));
    f.push_back({"loss.match", [](const RunConfig& c) { return to_string(c.train.loss.match); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.train.loss.match = parse_match_kind(v);
                   } catch (const ParameterError& e) {
                     throw ConfigError(e.what());
                   }
                 }});
    f.push_back(
        nested_number<std::size_t>("context.num_walks", [](RunConfig& c) -> auto& { return c.train.context.num_walks; }));
    f.push_back(
        nested_number<std::size_t>("context.walk_len", [](RunConfig& c) -> auto& { return c.train.context.walk_len; }));
    f.push_back(nested_number<std::size_t>("context.q", [](RunConfig& c) -> auto& { return c.train.context.q; }));
    f.push_back({"eval.ks", [](const RunConfig& c) { return format_list(c.ks); },
                 [](RunConfig& c, const std::string& v) { c.ks = parse_list<std::size_t>("eval.ks", v); }});
    f.push_back(number_field("bench.pairs", &RunConfig::bench_pairs));
    f.push_back(number_field("bench.repetitions", &RunConfig::bench_repetitions));
    f.push_back({"run.seeds", [](const RunConfig& c) { return format_list(c.seeds); },
                 [](RunConfig& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>("run.seeds", v); }});
    f.push_back({"run.out", [](const RunConfig& c) { return c.out; },
                 [](RunConfig& c, const std::string& v) { c.out = v; }});
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (ks.empty()) throw ConfigError("eval.ks must not be empty");
  for (std::size_t k : ks) {
    if (k == 0) throw ConfigError("eval.ks entries must be >= 1");
  }
  if (bench_pairs == 0 || bench_repetitions == 0) throw ConfigError("bench.pairs and bench.repetitions must be >= 1");
  if (!(new_frac > 0.0 && new_frac < 1.0)) throw ConfigError("split.new_frac must be in (0, 1)");
  if (!(val_frac >= 0.0) || !(test_frac >= 0.0) || !(val_frac + test_frac < 1.0)) {
    throw ConfigError("split fractions must be >= 0 with val_frac + test_frac < 1");
  }
  try {
    model.validate();
    train.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

void RunConfig::resolve_paths(const std::filesystem::path& base) {
  auto fix = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  fix(edges);
  fix(features);
  fix(out);
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  for (const Field& f : fields()) {
    if (f.get(a) != f.get(b)) return false;
  }
  return true;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_setting(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected section.key=value, got '" + assignment + "'");
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig parse_config(std::istream& in, const std::string& name) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    try {
      apply_setting(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string(), 0, "cannot open config file");
  RunConfig cfg = parse_config(in, path.string());
  cfg.resolve_paths(path.parent_path());
  return cfg;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const Field& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace llp
