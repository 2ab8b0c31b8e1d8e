#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lifopri/kernel.hpp"
#include "lifopri/metrics.hpp"
#include "lifopri/scenario.hpp"

namespace lifopri {

struct RunSpec {
  Scheme scheme = Scheme::SingleQueueFifo;
  double rho = 1.0;
  std::uint64_t seed = 1;
  /// Flat client timeout replacing the scenario's timeout model.
  std::optional<Seconds> fixed_timeout;
};

/// Queue layout for a scheme.
std::vector<QueueSpec> queues_for(const ScenarioConfig& scenario, Scheme scheme);

/// Resolves one (scheme, rho, seed) point; `capacity` in requests/s defines rho = 1.
RunConfig make_run_config(const ScenarioConfig& scenario, const RunSpec& spec, double capacity);

/// Largest request rate whose long-run completion ratio stays at or above the
/// target with patient clients (no timeouts, no retries) and FIFO service.
/// Throws NoConvergence if the search cannot bracket that rate.
double calibrate_capacity(const ScenarioConfig& scenario);

/// Completion ratio of one calibration probe at `request_rate`.
double calibration_probe(const ScenarioConfig& scenario, double request_rate);

/// Cross product of schemes, rho values, seeds and timeout variants.
std::vector<RunSpec> expand_runs(const ScenarioConfig& scenario);

struct RunMetrics {
  /// In-time completions per second after warm-up.
  double throughput = 0.0;
  double capacity_fraction = 0.0;
  double mean_response = 0.0;
  SummaryRow overall;
  SummaryRow browsing;
  SummaryRow transaction;
  double session_completion_pct = 0.0;
  double mean_session_latency = 0.0;
  double mean_utilization = 0.0;
};

RunMetrics compute_metrics(const SimulationResult& result, double capacity, double warmup_fraction);

struct RunOutput {
  RunSpec spec;
  double capacity = 0.0;
  SimulationResult result;
  RunMetrics metrics;
};

/// Runs every spec; independent runs execute in parallel.
std::vector<RunOutput> run_sweep(const ScenarioConfig& scenario, const std::vector<RunSpec>& specs, double capacity,
                                 bool detailed_logs = false);
/// Single-threaded reference for run_sweep.
std::vector<RunOutput> run_sweep_serial(const ScenarioConfig& scenario, const std::vector<RunSpec>& specs,
                                        double capacity, bool detailed_logs = false);

std::string run_stem(const ScenarioConfig& scenario, const RunSpec& spec);

/// Per-run ledger, CCDF, utilization trace, switch log and summary files.
void write_run_files(const std::filesystem::path& dir, const ScenarioConfig& scenario, const RunOutput& run);

struct ScenarioOverrides {
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::vector<double>> rho;
  std::optional<Scheme> scheme;
};

/// Calibrates (unless the scenario fixes the capacity), sweeps, writes the
/// per-run files and regenerates the aggregates in `out_dir`.
std::vector<std::filesystem::path> run_scenario(const std::filesystem::path& scenario_path,
                                                const std::filesystem::path& out_dir,
                                                const ScenarioOverrides& overrides = {});

/// Rebuilds aggregate tables and plots from the per-run files in `dir`.
/// Returns the files written.
std::vector<std::filesystem::path> report(const std::filesystem::path& dir);

/// Grid used for CCDF files, in seconds.
std::vector<Seconds> ccdf_grid();

}  // namespace lifopri
