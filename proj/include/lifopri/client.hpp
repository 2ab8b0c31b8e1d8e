#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lifopri/rng.hpp"
#include "lifopri/types.hpp"
#include "lifopri/workload.hpp"

namespace lifopri {

enum class ThinkDistribution : std::uint8_t { Exponential, Fixed };

/// Per-attempt client patience: base timeout plus a think-timeout component.
struct TimeoutModel {
  Seconds base_timeout = 8.0;
  Seconds think_timeout_mean = 12.0;
  ThinkDistribution think_distribution = ThinkDistribution::Exponential;

  /// Clients that never give up.
  static TimeoutModel infinite();
  /// A flat timeout for every request.
  static TimeoutModel fixed(Seconds total);
  bool is_infinite() const;
};

struct RetryPolicy {
  double retry_probability = 0.4;
  int max_retries = 5;

  static RetryPolicy none() { return {0.0, 0}; }
};

/// One attempt of one page request. Retries are new Requests with attempt + 1.
struct Request {
  AttemptId id = 0;
  SessionId session = 0;
  RequestKind kind = RequestKind::Main;
  /// Index of this page in the session trace.
  std::uint32_t position = 0;
  Seconds issue_time = 0.0;
  Seconds deadline = 0.0;
  int attempt = 0;
};

enum class SessionStatus : std::uint8_t { Active, Completed, Aborted };

struct SessionInstance {
  SessionId id = 0;
  std::vector<RequestKind> trace;
  std::size_t cursor = 0;
  SessionStatus status = SessionStatus::Active;
  Seconds arrival_time = 0.0;
  Seconds end_time = 0.0;
};

Seconds sample_deadline(const TimeoutModel& tm, Seconds issue_time, Engine& rng);

/// Retry (a fresh attempt issued at the deadline instant with its own
/// deadline) or nullopt to abandon. `retry_rng` decides; `deadline_rng` draws
/// the new deadline.
std::optional<Request> on_timeout(const Request& req, const RetryPolicy& policy,
                                  const TimeoutModel& timeouts, Engine& retry_rng,
                                  Engine& deadline_rng);

enum class Outcome : std::uint8_t { Success, Failure };

struct SessionStep {
  /// Kind to issue next, when the session continues.
  std::optional<RequestKind> next;
  /// Requests of the trace that will never be issued (only on failure).
  std::vector<RequestKind> not_generated;
};

/// Advances or aborts the session after the request at its cursor resolves.
SessionStep on_request_resolved(SessionInstance& session, Outcome outcome, Seconds now);

struct SessionArrival {
  Seconds time = 0.0;
  std::size_t trace_index = 0;
};

/// Poisson arrivals on [0, horizon]; the i-th arrival gets trace i mod pool_size.
std::vector<SessionArrival> schedule_session_arrivals(double rate, Seconds horizon,
                                                      std::size_t pool_size, Engine& rng);

}  // namespace lifopri
