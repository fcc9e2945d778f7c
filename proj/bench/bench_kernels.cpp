// Serial reference vs OpenMP kernels on inference-sized problems.
//
//   bench_kernels [--nodes N] [--degree D] [--width W] [--reps R]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "llp/kernels.hpp"
#include "llp/synthetic.hpp"

namespace {

double time_median(const std::function<void()>& f, int reps) {
  std::vector<double> t;
  f();  // warm-up
  for (int i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), t.end());
  return t[t.size() / 2];
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   x%.2f\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  std::size_t nodes = 20000, width = 128;
  double degree = 10;
  int reps = 5;
  app.add_option("--nodes", nodes);
  app.add_option("--degree", degree);
  app.add_option("--width", width);
  app.add_option("--reps", reps);
  CLI11_PARSE(app, argc, argv);

  llp::SbmConfig cfg;
  cfg.nodes = nodes;
  cfg.avg_degree = degree;
  cfg.features = width;
  const llp::Graph g = llp::make_sbm(cfg);
  const double* x = g.features().data();
  std::vector<double> w(width * width, 0.01), out(nodes * width), out2(width * width);
  namespace k = llp::kernels;

  std::printf("%zu nodes, %zu edges, width %zu, openmp %s\n", g.num_nodes(), g.num_edges(), width,
              k::openmp_enabled() ? "on" : "off");
  report("gemm_nn", time_median([&] { k::serial::gemm_nn(x, w.data(), out.data(), nodes, width, width, false); }, reps),
         time_median([&] { k::parallel::gemm_nn(x, w.data(), out.data(), nodes, width, width, false); }, reps));
  report("gemm_tn", time_median([&] { k::serial::gemm_tn(x, x, out2.data(), nodes, width, width, false); }, reps),
         time_median([&] { k::parallel::gemm_tn(x, x, out2.data(), nodes, width, width, false); }, reps));
  report("mean_aggregate", time_median([&] { k::serial::mean_aggregate(g.csr(), x, out.data(), width); }, reps),
         time_median([&] { k::parallel::mean_aggregate(g.csr(), x, out.data(), width); }, reps));
  report("mean_aggregate_adjoint",
         time_median([&] { k::serial::mean_aggregate_adjoint(g.csr(), x, out.data(), width); }, reps),
         time_median([&] { k::parallel::mean_aggregate_adjoint(g.csr(), x, out.data(), width); }, reps));
  return 0;
}
