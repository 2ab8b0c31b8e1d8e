#include "lifopri/client.hpp"

#include <cmath>
#include <limits>

namespace lifopri {

TimeoutModel TimeoutModel::infinite() {
  return {std::numeric_limits<Seconds>::infinity(), 0.0, ThinkDistribution::Fixed};
}

TimeoutModel TimeoutModel::fixed(Seconds total) { return {total, 0.0, ThinkDistribution::Fixed}; }

bool TimeoutModel::is_infinite() const { return std::isinf(base_timeout); }

Seconds sample_deadline(const TimeoutModel& tm, Seconds issue_time, Engine& rng) {
  const Seconds think = tm.think_distribution == ThinkDistribution::Exponential
                            ? exponential(rng, tm.think_timeout_mean)
                            : tm.think_timeout_mean;
  return issue_time + tm.base_timeout + think;
}

std::optional<Request> on_timeout(const Request& req, const RetryPolicy& policy,
                                  const TimeoutModel& timeouts, Engine& retry_rng,
                                  Engine& deadline_rng) {
  if (req.attempt >= policy.max_retries) return std::nullopt;
  if (!(uniform01(retry_rng) < policy.retry_probability)) return std::nullopt;
  Request retry = req;
  retry.attempt = req.attempt + 1;
  retry.issue_time = req.deadline;
  retry.deadline = sample_deadline(timeouts, retry.issue_time, deadline_rng);
  return retry;
}

SessionStep on_request_resolved(SessionInstance& session, Outcome outcome, Seconds now) {
  SessionStep step;
  if (session.status != SessionStatus::Active) return step;
  if (outcome == Outcome::Success) {
    ++session.cursor;
    if (session.cursor < session.trace.size()) {
      step.next = session.trace[session.cursor];
    } else {
      session.status = SessionStatus::Completed;
      session.end_time = now;
    }
    return step;
  }
  session.status = SessionStatus::Aborted;
  session.end_time = now;
  step.not_generated.assign(session.trace.begin() + static_cast<std::ptrdiff_t>(session.cursor) + 1,
                            session.trace.end());
  return step;
}

std::vector<SessionArrival> schedule_session_arrivals(double rate, Seconds horizon,
                                                      std::size_t pool_size, Engine& rng) {
  std::vector<SessionArrival> out;
  if (!(rate > 0.0) || pool_size == 0) return out;
  const double mean_gap = 1.0 / rate;
  Seconds t = exponential(rng, mean_gap);
  std::size_t i = 0;
  while (t <= horizon) {
    out.push_back({t, i % pool_size});
    ++i;
    t += exponential(rng, mean_gap);
  }
  return out;
}

}  // namespace lifopri
