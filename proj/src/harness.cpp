#include "lifopri/harness.hpp"

#include <fmt/format.h>

#include <cmath>
#include <exception>
#include <map>

#include "lifopri/model_io.hpp"

namespace lifopri {

std::vector<QueueSpec> queues_for(const ScenarioConfig& scenario, Scheme scheme) {
  const auto& s = scenario.server;
  auto single = [&](QueueRule rule) { return QueueBank::single_queue(s.single_queue_capacity, rule); };
  auto per_kind = [&](QueueRule browsing_rule) {
    UtilityTable u;
    if (s.utilities) {
      u.utility = *s.utilities;
    } else {
      u = derive_utilities(compute_reach_probability(scenario.model), scenario.model.scales);
    }
    return QueueBank::per_kind(u, s.browsing_capacity, s.transaction_capacity, browsing_rule);
  };
  std::optional<QueueBank> bank;
  switch (scheme) {
    case Scheme::AlwaysFifo: bank = single(QueueRule::Fifo); break;
    case Scheme::AlwaysLifo: bank = single(QueueRule::Lifo); break;
    case Scheme::LifoAtOverload: bank = single(QueueRule::Adaptive); break;
    case Scheme::SingleQueueFifo: bank = single(QueueRule::Fifo); break;
    case Scheme::EightQueueAllFifo: bank = per_kind(QueueRule::Fifo); break;
    case Scheme::EightQueueLifoPri: bank = per_kind(QueueRule::Adaptive); break;
  }
  std::vector<QueueSpec> out;
  for (std::size_t q = 0; q < bank->queue_count(); ++q) out.push_back(bank->spec(q));
  return out;
}

RunConfig make_run_config(const ScenarioConfig& scenario, const RunSpec& spec, double capacity) {
  RunConfig cfg;
  cfg.model = scenario.model;
  cfg.trace_mode = scenario.client.trace_mode;
  cfg.pool_size = scenario.client.pool_size;
  cfg.session_rate = spec.rho * capacity / mean_requests_per_session(scenario.model);
  cfg.horizon = scenario.horizon;
  cfg.seed = spec.seed;
  cfg.queues = queues_for(scenario, spec.scheme);
  cfg.controller = DisciplineController{scenario.server.upper_threshold, scenario.server.lower_threshold,
                                        Policy::Fifo, scenario.server.utilization_window};
  cfg.profile = scenario.profile;
  cfg.workers = scenario.server.workers;
  cfg.cpus = scenario.server.cpus;
  cfg.timeouts = spec.fixed_timeout ? TimeoutModel::fixed(*spec.fixed_timeout) : scenario.client.timeouts;
  cfg.retry = scenario.client.retry;
  cfg.think_time = scenario.client.think_time;
  return cfg;
}

double calibration_probe(const ScenarioConfig& scenario, double request_rate) {
  const Scheme fifo = scenario.kind == ScenarioKind::SingleQueue ? Scheme::AlwaysFifo : Scheme::SingleQueueFifo;
  RunConfig cfg = make_run_config(scenario, RunSpec{fifo, 1.0, scenario.calibration.seed, std::nullopt}, request_rate);
  cfg.timeouts = TimeoutModel::infinite();
  cfg.retry = RetryPolicy::none();
  cfg.horizon = scenario.calibration.requests / request_rate;
  const auto result = run(cfg);
  const auto t = result.ledger.totals(all_kinds());
  if (t.intended() == 0) return 1.0;
  return static_cast<double>(t.completed) / static_cast<double>(t.intended());
}

double calibrate_capacity(const ScenarioConfig& scenario) {
  scenario.validate();
  const double busy = mean_exec_per_request(scenario.model) * scenario.profile.busy_fraction;
  if (!(busy > 0.0)) throw Error(Errc::NoConvergence, "requests carry no CPU work, capacity is unbounded");
  const double bound = scenario.server.cpus / busy;
  const double target = scenario.calibration.target_ratio;

  double lo = 0.5 * bound;
  int halvings = 0;
  while (calibration_probe(scenario, lo) < target) {
    if (++halvings > 8) {
      throw Error(Errc::NoConvergence, fmt::format("completion ratio stays below {} even at {:.4g} req/s", target, lo));
    }
    lo /= 2.0;
  }
  double hi = 1.5 * bound;
  if (calibration_probe(scenario, hi) >= target) {
    throw Error(Errc::NoConvergence, fmt::format("completion ratio still >= {} at {:.4g} req/s", target, hi));
  }
  while (hi - lo > scenario.calibration.relative_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    (calibration_probe(scenario, mid) >= target ? lo : hi) = mid;
  }
  return lo;
}

std::vector<RunSpec> expand_runs(const ScenarioConfig& scenario) {
  std::vector<std::optional<Seconds>> variants;
  if (scenario.client.fixed_timeouts.empty()) {
    variants.emplace_back(std::nullopt);
  } else {
    for (double t : scenario.client.fixed_timeouts) variants.emplace_back(t);
  }
  std::vector<RunSpec> out;
  for (const auto& v : variants) {
    for (double r : scenario.rho) {
      for (auto s : scenario.schemes) {
        for (auto seed : scenario.seeds) out.push_back(RunSpec{s, r, seed, v});
      }
    }
  }
  return out;
}

RunMetrics compute_metrics(const SimulationResult& result, double capacity, double warmup_fraction) {
  RunMetrics m;
  const Seconds warmup = warmup_fraction * result.horizon;
  if (result.horizon > warmup) m.throughput = throughput(result.ledger, warmup, result.horizon);
  m.capacity_fraction = capacity > 0.0 ? m.throughput / capacity : 0.0;
  m.mean_response = mean_response(result.ledger);
  m.overall = summarize(result.ledger);
  m.browsing = summarize(result.ledger, kinds_of(RequestClass::Browsing));
  m.transaction = summarize(result.ledger, kinds_of(RequestClass::Transaction));
  if (result.sessions.arrived > 0) {
    m.session_completion_pct =
        100.0 * static_cast<double>(result.sessions.completed) / static_cast<double>(result.sessions.arrived);
  }
  if (!result.session_latencies.empty()) {
    double sum = 0.0;
    for (double l : result.session_latencies) sum += l;
    m.mean_session_latency = sum / static_cast<double>(result.session_latencies.size());
  }
  double usum = 0.0;
  std::size_t un = 0;
  for (const auto& u : result.utilization) {
    if (u.time <= warmup) continue;
    usum += u.utilization;
    ++un;
  }
  m.mean_utilization = un ? usum / static_cast<double>(un) : 0.0;
  return m;
}

namespace {

using PoolMap = std::map<std::uint64_t, std::shared_ptr<const std::vector<SessionTrace>>>;

PoolMap pools_for(const ScenarioConfig& scenario, const std::vector<RunSpec>& specs) {
  PoolMap pools;
  if (scenario.client.trace_mode != TraceMode::Cycle) return pools;
  for (const auto& s : specs) {
    if (!pools.count(s.seed)) {
      pools[s.seed] = std::make_shared<const std::vector<SessionTrace>>(
          generate_trace_pool(scenario.model, scenario.client.pool_size, s.seed));
    }
  }
  return pools;
}

RunOutput execute(const ScenarioConfig& scenario, const RunSpec& spec, double capacity, const PoolMap& pools,
                  bool detailed_logs) {
  RunConfig cfg = make_run_config(scenario, spec, capacity);
  if (auto it = pools.find(spec.seed); it != pools.end()) cfg.pool = it->second;
  cfg.detailed_logs = detailed_logs;
  RunOutput out{spec, capacity, run(cfg), {}};
  out.metrics = compute_metrics(out.result, capacity, scenario.warmup_fraction);
  return out;
}

}  // namespace

std::vector<RunOutput> run_sweep(const ScenarioConfig& scenario, const std::vector<RunSpec>& specs, double capacity,
                                 bool detailed_logs) {
  const auto pools = pools_for(scenario, specs);
  std::vector<RunOutput> out(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  const auto n = static_cast<std::int64_t>(specs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = execute(scenario, specs[i], capacity, pools, detailed_logs);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<RunOutput> run_sweep_serial(const ScenarioConfig& scenario, const std::vector<RunSpec>& specs,
                                        double capacity, bool detailed_logs) {
  const auto pools = pools_for(scenario, specs);
  std::vector<RunOutput> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(execute(scenario, s, capacity, pools, detailed_logs));
  return out;
}

std::string run_stem(const ScenarioConfig& scenario, const RunSpec& spec) {
  std::string stem = fmt::format("{}_{}_rho{:.3f}_seed{}", scenario.name, scheme_slug(spec.scheme), spec.rho, spec.seed);
  if (spec.fixed_timeout) stem += fmt::format("_to{:g}", *spec.fixed_timeout);
  return stem;
}

std::vector<Seconds> ccdf_grid() {
  std::vector<Seconds> grid;
  for (int i = 0; i <= 240; ++i) grid.push_back(0.25 * i);
  return grid;
}

namespace {

std::string ledger_csv(const OutcomeLedger& ledger) {
  std::string s = "type,class,generated,completed,timed_out,dropped,not_generated\n";
  auto row = [&](std::string_view name, std::string_view cls, const KindCounts& c) {
    s += fmt::format("{},{},{},{},{},{},{}\n", name, cls, c.generated, c.completed, c.timed_out, c.dropped,
                     c.not_generated);
  };
  for (auto k : kAllKinds) row(label(k), class_name(class_of(k)), ledger.counts(k));
  row("Browsing", "Browsing", ledger.totals(kinds_of(RequestClass::Browsing)));
  row("Transaction", "Transaction", ledger.totals(kinds_of(RequestClass::Transaction)));
  row("All", "All", ledger.totals(all_kinds()));
  return s;
}

std::string ccdf_csv(const OutcomeLedger& ledger) {
  std::string s = "filter,t,ccdf\n";
  std::vector<std::pair<std::string, KindSet>> filters = {{"All", all_kinds()},
                                                          {"Browsing", kinds_of(RequestClass::Browsing)},
                                                          {"Transaction", kinds_of(RequestClass::Transaction)}};
  for (auto k : kAllKinds) filters.emplace_back(std::string(label(k)), only(k));
  const auto grid = ccdf_grid();
  for (const auto& [name, filter] : filters) {
    if (ledger.totals(filter).resolved() == 0) continue;
    const auto c = ccdf(ledger, filter);
    for (double t : grid) s += fmt::format("{},{:.2f},{:.6f}\n", name, t, c.at(t));
    s += fmt::format("{},inf,{:.6f}\n", name, c.infinite_mass());
  }
  return s;
}

std::string summary_csv(const ScenarioConfig& scenario, const RunOutput& run) {
  const auto& r = run.result;
  const auto& m = run.metrics;
  std::string s = "key,value\n";
  auto kv = [&](std::string_view k, const std::string& v) { s += fmt::format("{},{}\n", k, v); };
  kv("scenario", scenario.name);
  kv("kind", std::string(scenario_kind_name(scenario.kind)));
  kv("scheme", std::string(scheme_name(run.spec.scheme)));
  kv("rho", fmt::format("{:.6f}", run.spec.rho));
  kv("seed", fmt::format("{}", run.spec.seed));
  kv("timeout_s", run.spec.fixed_timeout ? fmt::format("{:g}", *run.spec.fixed_timeout) : "model");
  kv("capacity_rps", fmt::format("{:.6f}", run.capacity));
  kv("horizon_s", fmt::format("{:.6f}", r.horizon));
  kv("sessions_arrived", fmt::format("{}", r.sessions.arrived));
  kv("sessions_completed", fmt::format("{}", r.sessions.completed));
  kv("sessions_aborted", fmt::format("{}", r.sessions.aborted));
  kv("session_completion_pct", fmt::format("{:.6f}", m.session_completion_pct));
  kv("throughput_rps", fmt::format("{:.6f}", m.throughput));
  kv("capacity_fraction", fmt::format("{:.6f}", m.capacity_fraction));
  kv("mean_response_s", fmt::format("{:.6f}", m.mean_response));
  kv("mean_session_latency_s", fmt::format("{:.6f}", m.mean_session_latency));
  kv("completed_pct", fmt::format("{:.6f}", m.overall.completed));
  kv("timed_out_pct", fmt::format("{:.6f}", m.overall.timed_out));
  kv("dropped_pct", fmt::format("{:.6f}", m.overall.dropped));
  kv("not_generated_pct", fmt::format("{:.6f}", m.overall.not_generated));
  kv("mean_utilization", fmt::format("{:.6f}", m.mean_utilization));
  kv("late_completions", fmt::format("{}", r.late_completions));
  kv("discipline_switches", fmt::format("{}", r.switches.size()));
  kv("busy_time_s", fmt::format("{:.6f}", r.busy_time));
  kv("end_time_s", fmt::format("{:.6f}", r.end_time));
  kv("events", fmt::format("{}", r.events));
  return s;
}

}  // namespace

void write_run_files(const std::filesystem::path& dir, const ScenarioConfig& scenario, const RunOutput& run) {
  const auto stem = run_stem(scenario, run.spec);
  const auto& r = run.result;
  write_text_file_atomic(dir / (stem + ".ledger.csv"), ledger_csv(r.ledger));
  write_text_file_atomic(dir / (stem + ".ccdf.csv"), ccdf_csv(r.ledger));

  std::string trace = "time_s,utilization,browsing_policy\n";
  for (const auto& u : r.utilization) {
    trace += fmt::format("{:.3f},{:.6f},{}\n", u.time, u.utilization, policy_name(u.policy));
  }
  write_text_file_atomic(dir / (stem + ".trace.csv"), trace);

  std::string sw = "time_s,utilization,from,to\n";
  for (const auto& x : r.switches) {
    sw += fmt::format("{:.6f},{:.6f},{},{}\n", x.time, x.utilization, policy_name(x.from), policy_name(x.to));
  }
  write_text_file_atomic(dir / (stem + ".switches.csv"), sw);
  write_text_file_atomic(dir / (stem + ".summary.csv"), summary_csv(scenario, run));
}

std::vector<std::filesystem::path> run_scenario(const std::filesystem::path& scenario_path,
                                                const std::filesystem::path& out_dir,
                                                const ScenarioOverrides& overrides) {
  ScenarioConfig scenario = load_scenario(scenario_path);
  if (overrides.seeds) scenario.seeds = *overrides.seeds;
  if (overrides.rho) scenario.rho = *overrides.rho;
  if (overrides.scheme) scenario.schemes = {*overrides.scheme};
  scenario.validate();

  const double capacity = scenario.capacity ? *scenario.capacity : calibrate_capacity(scenario);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));

  const auto specs = expand_runs(scenario);
  const auto runs = run_sweep(scenario, specs, capacity);
  std::vector<std::filesystem::path> written;
  for (const auto& r : runs) {
    write_run_files(out_dir, scenario, r);
    written.push_back(out_dir / (run_stem(scenario, r.spec) + ".summary.csv"));
  }
  auto aggregates = report(out_dir);
  written.insert(written.end(), aggregates.begin(), aggregates.end());
  return written;
}

}  // namespace lifopri
