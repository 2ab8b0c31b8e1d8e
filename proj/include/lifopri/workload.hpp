#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lifopri/rng.hpp"
#include "lifopri/types.hpp"

namespace lifopri {

using StateRow = std::array<double, kStateCount>;
using TransitionMatrix = std::array<StateRow, kStateCount>;

struct UtilityScales {
  double browsing = 1000.0;
  double transaction = 5000.0;
  /// Reach probabilities are rounded to this many significant digits before
  /// scaling; 0 disables rounding.
  int significant_digits = 2;
};

/// Stationary Markov chain over the page kinds plus an absorbing Exit state.
struct SessionModel {
  TransitionMatrix transitions{};
  /// Mean execution time per kind, in seconds.
  std::array<Seconds, kKindCount> mean_exec_time{};
  RequestKind start = RequestKind::Main;
  UtilityScales scales;

  double probability(std::size_t from, std::size_t to) const { return transitions[from][to]; }
  Seconds mean_exec(RequestKind k) const { return mean_exec_time[index_of(k)]; }

  /// Store chain used by the bundled e-commerce scenario.
  static SessionModel default_store();
  /// One-page chain: `kind` then Exit, with the given execution time.
  static SessionModel single_page(RequestKind kind, Seconds mean_exec);
};

/// Mean CGI execution times of the eight pages, in milliseconds.
inline constexpr std::array<double, kKindCount> kDefaultExecMs = {200, 300, 300, 222,
                                                                  280, 420, 500, 300};

struct SessionTrace {
  std::uint64_t id = 0;
  std::vector<RequestKind> requests;
};

struct UtilityTable {
  std::array<double, kKindCount> utility{};
  double browsing_scale = 0.0;
  double transaction_scale = 0.0;

  double of(RequestKind k) const { return utility[index_of(k)]; }
};

using ReachProbabilities = std::array<double, kKindCount>;

/// Throws Error with RowNotStochastic, NegativeEntry, ExitNotAbsorbing or
/// ExitUnreachable, naming the first offending row (and entry).
void validate_model(const SessionModel& model);

/// Probability that a request of each kind eventually leads to a Confirm.
/// Solves q = P q with q(Confirm) = 1 and q(Exit) = 0.
ReachProbabilities compute_reach_probability(const SessionModel& model);

/// Expected number of visits to each kind in one session.
std::array<double, kKindCount> expected_visits(const SessionModel& model);
double mean_requests_per_session(const SessionModel& model);
/// Expected execution time per request, weighted by the visit mix.
Seconds mean_exec_per_request(const SessionModel& model);

UtilityTable derive_utilities(const ReachProbabilities& q, const UtilityScales& scales);

/// Rounds `x` to `digits` significant decimal digits.
double round_significant(double x, int digits);

/// Walks the chain from the start state until Exit.
SessionTrace sample_trace(const SessionModel& model, Engine& rng);

/// `pool_size` traces; trace i is drawn from its own keyed engine, so the pool
/// is identical for any thread count.
std::vector<SessionTrace> generate_trace_pool(const SessionModel& model, std::size_t pool_size,
                                              std::uint64_t seed);
/// Single-threaded reference for generate_trace_pool.
std::vector<SessionTrace> generate_trace_pool_serial(const SessionModel& model,
                                                     std::size_t pool_size, std::uint64_t seed);

}  // namespace lifopri
