// Serial vs OpenMP timings for trace-pool generation and run sweeps.
#include <fmt/format.h>
#include <omp.h>

#include <chrono>
#include <vector>

#include "lifopri/harness.hpp"

using namespace lifopri;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t pool = argc > 1 ? std::stoul(argv[1]) : 200000;
  const auto model = SessionModel::default_store();
  fmt::print("threads: {}\n", omp_get_max_threads());

  std::vector<SessionTrace> serial_pool, parallel_pool;
  const double ps = seconds([&] { serial_pool = generate_trace_pool_serial(model, pool, 1); });
  const double pp = seconds([&] { parallel_pool = generate_trace_pool(model, pool, 1); });
  bool same = serial_pool.size() == parallel_pool.size();
  for (std::size_t i = 0; same && i < serial_pool.size(); ++i) {
    same = serial_pool[i].requests == parallel_pool[i].requests;
  }
  fmt::print("trace pool ({} sessions): serial {:.3f}s  parallel {:.3f}s  speedup {:.2f}  identical {}\n", pool, ps,
             pp, ps / pp, same);

  ScenarioConfig sc;
  sc.name = "bench";
  sc.model = model;
  sc.schemes = {Scheme::SingleQueueFifo, Scheme::EightQueueAllFifo, Scheme::EightQueueLifoPri};
  sc.rho = {0.8, 1.2, 1.6};
  sc.seeds = {1, 2};
  sc.horizon = 500.0;
  sc.validate();
  const double capacity = 8.0;
  const auto specs = expand_runs(sc);
  std::vector<RunOutput> serial_runs, parallel_runs;
  const double ss = seconds([&] { serial_runs = run_sweep_serial(sc, specs, capacity); });
  const double sp = seconds([&] { parallel_runs = run_sweep(sc, specs, capacity); });
  bool runs_same = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    runs_same = runs_same && serial_runs[i].result.events == parallel_runs[i].result.events &&
                serial_runs[i].metrics.throughput == parallel_runs[i].metrics.throughput;
  }
  fmt::print("sweep ({} runs, {:.0f}s horizon): serial {:.3f}s  parallel {:.3f}s  speedup {:.2f}  identical {}\n",
             specs.size(), sc.horizon, ss, sp, ss / sp, runs_same);
  return same && runs_same ? 0 : 1;
}
