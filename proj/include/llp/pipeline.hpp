#pragma once

// Pipeline stages behind the command-line tool. Each stage reads the
// artifacts of earlier stages from the output directory and writes its own.
//
// Output directory layout (S = seed, M = student method):
//   config.txt                     effective configuration
//   split_S.txt                    split manifest
//   teacher_S.ckpt / teacher_S.log checkpoint and per-epoch record
//   student_M_S.ckpt / .log
//   metrics_teacher.txt, metrics_M.txt       (+ _cold_start for production)
//   latency.txt

#include <filesystem>
#include <iosfwd>

#include "llp/config.hpp"
#include "llp/graph.hpp"
#include "llp/splits.hpp"

namespace llp {

/// Loads the configured dataset. Missing files raise LoadError naming the path.
Graph load_dataset(const RunConfig& cfg);

/// Builds the configured split of g for one seed.
AnySplit make_split(const RunConfig& cfg, const Graph& g, std::uint64_t seed);

std::filesystem::path split_path(const RunConfig& cfg, std::uint64_t seed);
std::filesystem::path teacher_path(const RunConfig& cfg, std::uint64_t seed);
std::filesystem::path student_path(const RunConfig& cfg, Method m, std::uint64_t seed);

void cmd_split(const RunConfig& cfg, std::ostream& log);
void cmd_train_teacher(const RunConfig& cfg, std::ostream& log);
void cmd_distill(const RunConfig& cfg, std::ostream& log);
/// Evaluates the teacher (when trained) and the configured student method.
void cmd_eval(const RunConfig& cfg, std::ostream& log);
void cmd_bench(const RunConfig& cfg, std::ostream& log);
/// split, train-teacher, distill, eval, bench.
void cmd_all(const RunConfig& cfg, std::ostream& log);

}  // namespace llp
