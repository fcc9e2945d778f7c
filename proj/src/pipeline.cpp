#include "llp/pipeline.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "llp/errors.hpp"
#include "llp/evaluation.hpp"
#include "llp/training.hpp"

namespace llp {

namespace fs = std::filesystem;

Graph load_dataset(const RunConfig& cfg) {
  BuildReport report;
  return load_graph(cfg.edges, cfg.features, &report);
}

AnySplit make_split(const RunConfig& cfg, const Graph& g, std::uint64_t seed) {
  if (cfg.split_kind == SplitKind::kTransductive) return transductive_split(g, cfg.val_frac, cfg.test_frac, seed);
  return production_split(g, cfg.new_frac, seed, cfg.val_frac);
}

fs::path split_path(const RunConfig& cfg, std::uint64_t seed) {
  return fs::path(cfg.out) / ("split_" + std::to_string(seed) + ".txt");
}
fs::path teacher_path(const RunConfig& cfg, std::uint64_t seed) {
  return fs::path(cfg.out) / ("teacher_" + std::to_string(seed) + ".ckpt");
}
fs::path student_path(const RunConfig& cfg, Method m, std::uint64_t seed) {
  return fs::path(cfg.out) / ("student_" + to_string(m) + "_" + std::to_string(seed) + ".ckpt");
}

namespace {

void prepare_out(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  std::ofstream out(fs::path(cfg.out) / "config.txt");
  if (!out) throw LoadError(cfg.out, 0, "cannot write to the output directory");
  write_config(out, cfg);
}

std::ofstream open_write(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw LoadError(p.string(), 0, "cannot open for writing");
  return out;
}

void require_file(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p)) throw PrerequisiteError("missing " + p.string() + "; run '" + stage + "' first");
}

AnySplit load_split(const RunConfig& cfg, const Graph& g, std::uint64_t seed) {
  const fs::path p = split_path(cfg, seed);
  require_file(p, "split");
  std::ifstream in(p);
  return read_manifest(in, g, p.string());
}

TrainingData training_data(const AnySplit& s) {
  return std::visit([](const auto& split) { return TrainingData::from(split); }, s);
}

fs::path with_suffix(fs::path p, const std::string& ext) { return p.replace_extension(ext); }

void write_record(const fs::path& ckpt, const RunRecord& rec) {
  auto out = open_write(with_suffix(ckpt, ".log"));
  rec.write(out);
}

}  // namespace

void cmd_split(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Graph g = load_dataset(cfg);
  prepare_out(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    const AnySplit split = make_split(cfg, g, seed);
    const auto problems = std::visit([&](const auto& s) { return validate_split(s, g); }, split);
    if (!problems.empty()) throw NumericError("split failed its own checks: " + problems.front());
    if (const auto* p = std::get_if<ProductionSplit>(&split)) {
      for (const auto& w : p->warnings) log << "warning: seed " << seed << ": " << w << '\n';
      log << "seed " << seed << ": " << p->existing_nodes.size() << " existing / " << p->new_nodes.size()
          << " new nodes, " << p->train_pos.size() << " train edges\n";
    } else {
      const auto& t = std::get<TransductiveSplit>(split);
      log << "seed " << seed << ": " << t.train_pos.size() << " train / " << t.val.pos.size() << " val / "
          << t.test.pos.size() << " test edges\n";
    }
    auto out = open_write(split_path(cfg, seed));
    write_manifest(out, split);
  }
}

void cmd_train_teacher(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Graph g = load_dataset(cfg);
  prepare_out(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    const AnySplit split = load_split(cfg, g, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    const TeacherResult r = train_teacher(training_data(split), cfg.model, tc);
    save_checkpoint(teacher_path(cfg, seed), r.model);
    write_record(teacher_path(cfg, seed), r.record);
    log << "teacher seed " << seed << ": best epoch " << r.record.best_epoch << ", val hits@" << tc.hits_k << " "
        << format_percent(r.record.best_val) << " (" << r.record.epochs.size() << " epochs, "
        << static_cast<int>(r.record.total_seconds()) << " s)\n";
  }
}

void cmd_distill(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Graph g = load_dataset(cfg);
  prepare_out(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    const AnySplit split = load_split(cfg, g, seed);
    const TrainingData data = training_data(split);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    std::optional<TeacherArtifacts> artifacts;
    if (cfg.method != Method::kMlp) {
      require_file(teacher_path(cfg, seed), "train-teacher");
      artifacts = precompute_teacher_artifacts(load_teacher(teacher_path(cfg, seed)), *data.graph);
    }
    const StudentResult r =
        distill_student(artifacts ? &*artifacts : nullptr, data, cfg.model, tc, cfg.method);
    const fs::path ckpt = student_path(cfg, cfg.method, seed);
    save_checkpoint(ckpt, r.model);
    write_record(ckpt, r.record);
    log << to_string(cfg.method) << " student seed " << seed << ": best epoch " << r.record.best_epoch
        << ", val hits@" << tc.hits_k << " " << format_percent(r.record.best_val) << " (" << r.record.epochs.size()
        << " epochs, " << static_cast<int>(r.record.total_seconds()) << " s)\n";
  }
}

namespace {

struct Tables {
  MetricsTable main;
  MetricsTable cold;
};

template <class Model>
void evaluate_into(Tables& t, const Model& m, const AnySplit& split, std::uint64_t seed, const RunConfig& cfg) {
  if (const auto* ts = std::get_if<TransductiveSplit>(&split)) {
    t.main.add(seed, evaluate_split(m, eval_target(*ts), cfg.ks));
    return;
  }
  const auto& ps = std::get<ProductionSplit>(split);
  t.main.add(seed, evaluate_split(m, eval_target(ps), cfg.ks));
  t.cold.add(seed, evaluate_split(m, eval_target(cold_start_view(ps)), cfg.ks));
}

void emit(const RunConfig& cfg, const Tables& t, const std::string& name, std::ostream& log) {
  {
    auto out = open_write(fs::path(cfg.out) / ("metrics_" + name + ".txt"));
    t.main.write_kv(out);
  }
  const bool production = cfg.split_kind == SplitKind::kProduction;
  t.main.write_table(log, name + (production ? " (production)" : " (transductive)"));
  if (production) {
    auto out = open_write(fs::path(cfg.out) / ("metrics_" + name + "_cold_start.txt"));
    t.cold.write_kv(out);
    t.cold.write_table(log, name + " (cold start)");
  }
}

}  // namespace

void cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Graph g = load_dataset(cfg);
  prepare_out(cfg);
  bool have_teacher = true;
  for (std::uint64_t seed : cfg.seeds) {
    have_teacher = have_teacher && fs::exists(teacher_path(cfg, seed));
    require_file(student_path(cfg, cfg.method, seed), "distill");
  }
  Tables teacher, student;
  for (std::uint64_t seed : cfg.seeds) {
    const AnySplit split = load_split(cfg, g, seed);
    if (have_teacher) evaluate_into(teacher, load_teacher(teacher_path(cfg, seed)), split, seed, cfg);
    evaluate_into(student, load_student(student_path(cfg, cfg.method, seed)), split, seed, cfg);
  }
  if (have_teacher) emit(cfg, teacher, "teacher", log);
  emit(cfg, student, to_string(cfg.method), log);
}

void cmd_bench(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Graph g = load_dataset(cfg);
  prepare_out(cfg);
  const std::uint64_t seed = cfg.seeds.front();
  require_file(teacher_path(cfg, seed), "train-teacher");
  require_file(student_path(cfg, cfg.method, seed), "distill");
  BenchSpec spec;
  spec.pairs = cfg.bench_pairs;
  spec.repetitions = cfg.bench_repetitions;
  spec.seed = seed;
  const LatencyReport r =
      bench_inference(load_teacher(teacher_path(cfg, seed)), load_student(student_path(cfg, cfg.method, seed)), g, spec);
  auto out = open_write(fs::path(cfg.out) / "latency.txt");
  r.write_kv(out);
  log << "latency over " << r.pairs << " pairs (median of " << r.teacher_seconds.size()
      << "): teacher " << r.teacher_median * 1e3 << " ms, student " << r.student_median * 1e3 << " ms, speedup "
      << r.speedup << "x\n";
}

void cmd_all(const RunConfig& cfg, std::ostream& log) {
  cmd_split(cfg, log);
  cmd_train_teacher(cfg, log);
  cmd_distill(cfg, log);
  cmd_eval(cfg, log);
  cmd_bench(cfg, log);
}

}  // namespace llp
