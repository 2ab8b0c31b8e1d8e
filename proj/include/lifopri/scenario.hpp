#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifopri/client.hpp"
#include "lifopri/kernel.hpp"
#include "lifopri/server.hpp"
#include "lifopri/workload.hpp"

namespace lifopri {

enum class ScenarioKind : std::uint8_t { SingleQueue, Ecommerce };

enum class Scheme : std::uint8_t {
  AlwaysFifo,
  AlwaysLifo,
  LifoAtOverload,
  SingleQueueFifo,     // SQ
  EightQueueAllFifo,   // 8Q-AF
  EightQueueLifoPri,   // 8Q-LIFO-Pri
};

std::string_view scenario_kind_name(ScenarioKind k);
std::string_view scheme_name(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);
bool scheme_fits(ScenarioKind kind, Scheme s);
/// Lower-case name usable in file names.
std::string scheme_slug(Scheme s);

struct ServerSettings {
  int workers = 30;
  int cpus = 1;
  std::size_t single_queue_capacity = 100;
  std::size_t browsing_capacity = 50;
  std::size_t transaction_capacity = 25;
  double upper_threshold = 0.99;
  double lower_threshold = 0.95;
  Seconds utilization_window = 1.0;
  /// Per-kind queue utilities; derived from the session model when absent.
  std::optional<std::array<double, kKindCount>> utilities;
};

struct ClientSettings {
  TimeoutModel timeouts;
  RetryPolicy retry;
  Seconds think_time = 0.0;
  std::size_t pool_size = 1000;
  TraceMode trace_mode = TraceMode::Cycle;
  /// When non-empty, each value is run as a flat timeout variant instead of `timeouts`.
  std::vector<Seconds> fixed_timeouts;
};

struct CalibrationSettings {
  double target_ratio = 0.999;
  /// Requests offered per probe run.
  double requests = 40000;
  std::uint64_t seed = 7;
  double relative_tolerance = 1e-3;
};

struct ScenarioConfig {
  std::string name = "scenario";
  ScenarioKind kind = ScenarioKind::Ecommerce;
  std::vector<Scheme> schemes;
  std::vector<double> rho;
  std::vector<std::uint64_t> seeds{1};
  Seconds horizon = 5000.0;
  double warmup_fraction = 0.1;
  /// Requests per second at rho = 1; calibrated when absent.
  std::optional<double> capacity;

  SessionModel model;
  PhaseProfile profile;
  ServerSettings server;
  ClientSettings client;
  CalibrationSettings calibration;

  /// Throws ConfigInvalid with a diagnostic.
  void validate() const;
};

/// `base_dir` resolves a relative "model_file".
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace lifopri
