// Command-line entry point: llp <split|train-teacher|distill|eval|bench|all|synth> [options]

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "llp/config.hpp"
#include "llp/errors.hpp"
#include "llp/pipeline.hpp"
#include "llp/synthetic.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string method;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Run configuration file (section.key = value lines)");
  cmd->add_option("--seed", o.seeds, "Seed(s); overrides run.seeds")->delimiter(',');
  cmd->add_option("--method", o.method, "Student method")->check(CLI::IsMember({"mlp", "logit", "repr", "llp"}));
  cmd->add_option("--out", o.out, "Output directory; overrides run.out");
  cmd->add_option("--set", o.sets, "Override a config key: section.key=value (repeatable)");
}

llp::RunConfig build_config(const Options& o) {
  llp::RunConfig cfg = o.config.empty() ? llp::RunConfig{} : llp::load_config(o.config);
  for (const auto& s : o.sets) llp::apply_setting(cfg, s);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.method.empty()) llp::apply_setting(cfg, "train.method", o.method);
  if (!o.out.empty()) cfg.out = o.out;
  cfg.validate();
  return cfg;
}

int run_synth(const std::string& prefix, const llp::SbmConfig& sbm) {
  const llp::Graph g = llp::make_sbm(sbm);
  llp::save_graph(g, prefix + ".edges", prefix + ".features");
  std::cout << "wrote " << prefix << ".edges / .features: " << g.num_nodes() << " nodes, " << g.num_edges()
            << " edges\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link prediction with a GNN teacher distilled into an MLP student"};
  app.require_subcommand(1);

  Options opts;
  struct Stage {
    const char* name;
    const char* help;
    void (*fn)(const llp::RunConfig&, std::ostream&);
  };
  const std::vector<Stage> stages = {
      {"split", "Write split manifests", llp::cmd_split},
      {"train-teacher", "Train the SAGE teacher", llp::cmd_train_teacher},
      {"distill", "Train an MLP student", llp::cmd_distill},
      {"eval", "Evaluate the teacher and the student", llp::cmd_eval},
      {"bench", "Measure inference latency", llp::cmd_bench},
      {"all", "Run every stage", llp::cmd_all},
  };
  std::vector<CLI::App*> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opts);
    stage_cmds.push_back(cmd);
  }

  std::string synth_prefix;
  llp::SbmConfig sbm;
  auto* synth = app.add_subcommand("synth", "Generate a stochastic block model dataset");
  synth->add_option("prefix", synth_prefix, "Output prefix (writes PREFIX.edges and PREFIX.features)")->required();
  synth->add_option("--nodes", sbm.nodes, "Node count");
  synth->add_option("--blocks", sbm.blocks, "Block count");
  synth->add_option("--degree", sbm.avg_degree, "Target mean degree");
  synth->add_option("--p-within", sbm.p_within, "Probability an edge stays inside its block");
  synth->add_option("--features", sbm.features, "Feature width");
  synth->add_option("--signal", sbm.signal, "Block centroid scale");
  synth->add_option("--noise", sbm.noise, "Feature noise standard deviation");
  synth->add_option("--seed", sbm.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(synth_prefix, sbm);
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (stage_cmds[i]->parsed()) {
        const llp::RunConfig cfg = build_config(opts);
        stages[i].fn(cfg, std::cout);
      }
    }
    return 0;
  } catch (const llp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const llp::ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return 1;
  } catch (const llp::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const llp::PrerequisiteError& e) {
    std::cerr << "missing prerequisite: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
