#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include <iostream>

#include "lifopri/harness.hpp"

namespace {

using namespace lifopri;

int do_simulate(const std::string& scenario, const std::string& out, const std::vector<std::uint64_t>& seeds,
                const std::vector<double>& rho, const std::string& scheme) {
  ScenarioOverrides o;
  if (!seeds.empty()) o.seeds = seeds;
  if (!rho.empty()) o.rho = rho;
  if (!scheme.empty()) {
    o.scheme = parse_scheme(scheme);
    if (!o.scheme) throw Error(Errc::ConfigInvalid, fmt::format("unknown scheme '{}'", scheme));
  }
  const auto files = run_scenario(scenario, out, o);
  fmt::print("wrote {} files to {}\n", files.size(), out);
  return 0;
}

int do_calibrate(const std::string& path) {
  const auto scenario = load_scenario(path);
  const double cap = calibrate_capacity(scenario);
  fmt::print("capacity_rps,{:.4f}\n", cap);
  fmt::print("session_rate_at_rho1,{:.4f}\n", cap / mean_requests_per_session(scenario.model));
  return 0;
}

int do_report(const std::string& dir) {
  for (const auto& f : report(dir)) fmt::print("{}\n", f.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overload-control simulator for session-based web servers"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for parallel sweeps (default: OpenMP setting)");

  std::string scenario, out, scheme, dir;
  std::vector<std::uint64_t> seeds;
  std::vector<double> rho;

  auto* sim = app.add_subcommand("simulate", "Run every scheme/load/seed point of a scenario");
  sim->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',');
  sim->add_option("--rho", rho, "Comma-separated offered loads")->delimiter(',');
  sim->add_option("--scheme", scheme, "Run only this scheme");

  auto* cal = app.add_subcommand("calibrate", "Print the calibrated capacity of a scenario");
  cal->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("report", "Rebuild tables and plots from run files");
  rep->add_option("dir", dir, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*sim) return do_simulate(scenario, out, seeds, rho, scheme);
    if (*cal) return do_calibrate(scenario);
    if (*rep) return do_report(dir);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}
