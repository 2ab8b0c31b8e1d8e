#include "lifopri/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "lifopri/model_io.hpp"

namespace lifopri {

namespace {

constexpr std::array<std::string_view, 6> kSchemeNames = {
    "Always-FIFO", "Always-LIFO", "LIFO-at-overload", "SQ", "8Q-AF", "8Q-LIFO-Pri"};

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view section) {
  if (!obj.is_object()) throw Error(Errc::ConfigInvalid, fmt::format("'{}' must be an object", section));
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(Errc::ConfigInvalid, fmt::format("unknown key '{}' in {}", key, section));
    }
  }
}

PhaseDistribution parse_distribution(const std::string& s) {
  if (s == "exponential") return PhaseDistribution::Exponential;
  if (s == "deterministic") return PhaseDistribution::Deterministic;
  throw Error(Errc::ConfigInvalid, fmt::format("unknown phase distribution '{}'", s));
}

ThinkDistribution parse_think(const std::string& s) {
  if (s == "exponential") return ThinkDistribution::Exponential;
  if (s == "fixed") return ThinkDistribution::Fixed;
  throw Error(Errc::ConfigInvalid, fmt::format("unknown think-timeout distribution '{}'", s));
}

}  // namespace

std::string_view scenario_kind_name(ScenarioKind k) {
  return k == ScenarioKind::SingleQueue ? "E1-single-queue" : "E2-ecommerce";
}

std::string_view scheme_name(Scheme s) { return kSchemeNames[static_cast<std::size_t>(s)]; }

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (std::size_t i = 0; i < kSchemeNames.size(); ++i) {
    if (kSchemeNames[i] == name) return static_cast<Scheme>(i);
  }
  return std::nullopt;
}

bool scheme_fits(ScenarioKind kind, Scheme s) {
  const bool single = s == Scheme::AlwaysFifo || s == Scheme::AlwaysLifo || s == Scheme::LifoAtOverload;
  return single == (kind == ScenarioKind::SingleQueue);
}

std::string scheme_slug(Scheme s) {
  std::string out(scheme_name(s));
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void ScenarioConfig::validate() const {
  if (name.empty()) throw Error(Errc::ConfigInvalid, "scenario name is empty");
  if (schemes.empty()) throw Error(Errc::ConfigInvalid, "scheme list is empty");
  for (auto s : schemes) {
    if (!scheme_fits(kind, s)) {
      throw Error(Errc::ConfigInvalid, fmt::format("scheme {} does not belong to a {} scenario", scheme_name(s),
                                                   scenario_kind_name(kind)));
    }
  }
  if (rho.empty()) throw Error(Errc::ConfigInvalid, "rho list is empty");
  for (double r : rho) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(Errc::ConfigInvalid, fmt::format("rho must be > 0 (got {})", r));
  }
  if (seeds.empty()) throw Error(Errc::ConfigInvalid, "seed list is empty");
  if (!(horizon > 0.0)) throw Error(Errc::ConfigInvalid, "horizon must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw Error(Errc::ConfigInvalid, "warmup fraction must lie in [0,1)");
  }
  if (capacity && !(*capacity > 0.0)) throw Error(Errc::ConfigInvalid, "capacity must be positive");
  validate_model(model);
  profile.validate();
  DisciplineController{server.upper_threshold, server.lower_threshold, Policy::Fifo, server.utilization_window}
      .validate();
  if (server.utilities) {
    double max_browsing = -1.0, min_transaction = std::numeric_limits<double>::infinity();
    for (auto k : kAllKinds) {
      const double u = (*server.utilities)[index_of(k)];
      if (!(u >= 0.0) || !std::isfinite(u)) throw Error(Errc::ConfigInvalid, "utilities must be finite and >= 0");
      if (is_transaction(k)) {
        min_transaction = std::min(min_transaction, u);
      } else {
        max_browsing = std::max(max_browsing, u);
      }
    }
    if (!(min_transaction > max_browsing)) {
      throw Error(Errc::PriorityInversion, "a browsing utility is not below every transaction utility");
    }
  }
  if (server.workers < 1 || server.cpus < 1) throw Error(Errc::ConfigInvalid, "workers and cpus must be >= 1");
  if (client.pool_size == 0) throw Error(Errc::ConfigInvalid, "pool size must be >= 1");
  if (!(client.retry.retry_probability >= 0.0 && client.retry.retry_probability <= 1.0) ||
      client.retry.max_retries < 0) {
    throw Error(Errc::ConfigInvalid, "retry policy needs p in [0,1] and M >= 0");
  }
  for (double t : client.fixed_timeouts) {
    if (!(t > 0.0)) throw Error(Errc::ConfigInvalid, "fixed timeouts must be positive");
  }
  if (!(calibration.target_ratio > 0.0 && calibration.target_ratio < 1.0) || !(calibration.requests > 0.0)) {
    throw Error(Errc::ConfigInvalid, "calibration needs 0 < target_ratio < 1 and requests > 0");
  }
}

ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    check_keys(j, {"name", "kind", "schemes", "rho", "seeds", "horizon_s", "warmup_fraction", "capacity_rps",
                   "workload", "service", "server", "client", "calibration"},
               "scenario");
    ScenarioConfig c;
    c.name = j.value("name", c.name);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "E1-single-queue") {
      c.kind = ScenarioKind::SingleQueue;
    } else if (kind == "E2-ecommerce") {
      c.kind = ScenarioKind::Ecommerce;
    } else {
      throw Error(Errc::ConfigInvalid, fmt::format("unknown scenario kind '{}'", kind));
    }
    for (const auto& s : j.at("schemes")) {
      const auto name = s.get<std::string>();
      auto scheme = parse_scheme(name);
      if (!scheme) throw Error(Errc::ConfigInvalid, fmt::format("unknown scheme '{}'", name));
      c.schemes.push_back(*scheme);
    }
    c.rho = j.at("rho").get<std::vector<double>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.horizon = j.value("horizon_s", c.horizon);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    if (j.contains("capacity_rps") && !j.at("capacity_rps").is_null()) c.capacity = j.at("capacity_rps").get<double>();

    const auto& w = j.at("workload");
    check_keys(w, {"model_file", "model"}, "workload");
    if (w.contains("model_file")) {
      std::filesystem::path p = w.at("model_file").get<std::string>();
      c.model = load_model(p.is_absolute() ? p : base_dir / p);
    } else {
      c.model = model_from_json(w.at("model"));
    }

    if (j.contains("service")) {
      const auto& s = j.at("service");
      check_keys(s, {"phases", "busy_fraction", "distribution"}, "service");
      c.profile.phases = s.value("phases", c.profile.phases);
      c.profile.busy_fraction = s.value("busy_fraction", c.profile.busy_fraction);
      if (s.contains("distribution")) c.profile.distribution = parse_distribution(s.at("distribution").get<std::string>());
    }

    if (j.contains("server")) {
      const auto& s = j.at("server");
      check_keys(s, {"workers", "cpus", "single_queue_capacity", "browsing_capacity", "transaction_capacity",
                     "upper_threshold", "lower_threshold", "utilization_window_s", "utilities"},
                 "server");
      auto& v = c.server;
      v.workers = s.value("workers", v.workers);
      v.cpus = s.value("cpus", v.cpus);
      v.single_queue_capacity = s.value("single_queue_capacity", v.single_queue_capacity);
      v.browsing_capacity = s.value("browsing_capacity", v.browsing_capacity);
      v.transaction_capacity = s.value("transaction_capacity", v.transaction_capacity);
      v.upper_threshold = s.value("upper_threshold", v.upper_threshold);
      v.lower_threshold = s.value("lower_threshold", v.lower_threshold);
      v.utilization_window = s.value("utilization_window_s", v.utilization_window);
      if (s.contains("utilities")) {
        std::array<double, kKindCount> u{};
        std::set<std::size_t> seen;
        for (const auto& [name, value] : s.at("utilities").items()) {
          auto st = parse_state(name);
          if (!st || *st == kExit) throw Error(Errc::ConfigInvalid, fmt::format("unknown utility key '{}'", name));
          u[*st] = value.get<double>();
          seen.insert(*st);
        }
        if (seen.size() != kKindCount) throw Error(Errc::ConfigInvalid, "utilities must list all eight kinds");
        v.utilities = u;
      }
    }

    if (j.contains("client")) {
      const auto& s = j.at("client");
      check_keys(s, {"base_timeout_s", "think_timeout_mean_s", "think_distribution", "retry_probability",
                     "max_retries", "think_time_s", "pool_size", "trace_mode", "fixed_timeouts_s"},
                 "client");
      auto& v = c.client;
      v.timeouts.base_timeout = s.value("base_timeout_s", v.timeouts.base_timeout);
      v.timeouts.think_timeout_mean = s.value("think_timeout_mean_s", v.timeouts.think_timeout_mean);
      if (s.contains("think_distribution")) {
        v.timeouts.think_distribution = parse_think(s.at("think_distribution").get<std::string>());
      }
      v.retry.retry_probability = s.value("retry_probability", v.retry.retry_probability);
      v.retry.max_retries = s.value("max_retries", v.retry.max_retries);
      v.think_time = s.value("think_time_s", v.think_time);
      v.pool_size = s.value("pool_size", v.pool_size);
      if (s.contains("trace_mode")) {
        const auto m = s.at("trace_mode").get<std::string>();
        if (m == "cycle") {
          v.trace_mode = TraceMode::Cycle;
        } else if (m == "fresh") {
          v.trace_mode = TraceMode::Fresh;
        } else {
          throw Error(Errc::ConfigInvalid, fmt::format("unknown trace mode '{}'", m));
        }
      }
      if (s.contains("fixed_timeouts_s")) v.fixed_timeouts = s.at("fixed_timeouts_s").get<std::vector<double>>();
    }

    if (j.contains("calibration")) {
      const auto& s = j.at("calibration");
      check_keys(s, {"target_ratio", "requests", "seed", "relative_tolerance"}, "calibration");
      auto& v = c.calibration;
      v.target_ratio = s.value("target_ratio", v.target_ratio);
      v.requests = s.value("requests", v.requests);
      v.seed = s.value("seed", v.seed);
      v.relative_tolerance = s.value("relative_tolerance", v.relative_tolerance);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigInvalid, fmt::format("malformed scenario: {}", e.what()));
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigInvalid, fmt::format("{}: {}", path.string(), e.what()));
  }
  return scenario_from_json(j, path.parent_path());
}

}  // namespace lifopri
