#pragma once

// Run configuration: flat "section.key = value" text. Every key has a
// default, so an empty file is a valid configuration.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "llp/training.hpp"

namespace llp {

enum class SplitKind { kTransductive, kProduction };

struct RunConfig {
  std::string edges = "data/sbm200.edges";
  std::string features = "data/sbm200.features";

  SplitKind split_kind = SplitKind::kTransductive;
  double val_frac = 0.05;
  double test_frac = 0.15;
  double new_frac = 0.20;

  ModelConfig model;
  TrainConfig train;
  Method method = Method::kLlp;

  std::vector<std::size_t> ks{20, 50};
  std::size_t bench_pairs = 1000;
  std::size_t bench_repetitions = 10;

  std::vector<std::uint64_t> seeds{0};
  std::string out = "out";

  /// Throws ConfigError / ParameterError on inconsistent values.
  void validate() const;
  /// Makes relative data and output paths relative to base.
  void resolve_paths(const std::filesystem::path& base);

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

/// Applies one "section.key=value" (or "section.key = value") assignment.
/// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& assignment);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses config text on top of the defaults. Blank lines and '#' comments
/// are ignored. Errors carry the line number.
RunConfig parse_config(std::istream& in, const std::string& name = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every key in a fixed order; parse_config(serialize) reproduces cfg.
void write_config(std::ostream& out, const RunConfig& cfg);

/// All recognised keys, in serialization order.
std::vector<std::string> config_keys();

}  // namespace llp
