#include "lifopri/workload.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cmath>
#include <deque>

namespace lifopri {

namespace {

constexpr double kRowTolerance = 1e-9;

std::size_t confirm_index() { return index_of(RequestKind::Confirm); }

std::string state_name(std::size_t s) {
  return s == kExit ? std::string("Exit") : std::string(label(kind_at(s)));
}

}  // namespace

SessionModel SessionModel::default_store() {
  // Browsing transitions picked so that the reach probabilities toward Confirm
  // come out as 0.027 / 0.022 / 0.036 / 0.073 for Br-1..Br-4. Each transaction
  // step continues with probability 0.9. No self-loops.
  SessionModel m;
  auto set = [&](RequestKind from, std::size_t to, double p) { m.transitions[index_of(from)][to] = p; };
  using K = RequestKind;
  set(K::Main, index_of(K::Browse), 0.5);
  set(K::Main, index_of(K::Search), 0.3);
  set(K::Main, index_of(K::Details), 0.072);
  set(K::Main, kExit, 0.128);
  set(K::Browse, index_of(K::Search), 0.1);
  set(K::Browse, index_of(K::Details), 0.25);
  set(K::Browse, kExit, 0.65);
  set(K::Search, index_of(K::Browse), 0.1);
  set(K::Search, index_of(K::Details), 0.465);
  set(K::Search, kExit, 0.435);
  set(K::Details, index_of(K::Login), 0.1);
  set(K::Details, kExit, 0.9);
  set(K::Login, index_of(K::Shipping), 0.9);
  set(K::Login, kExit, 0.1);
  set(K::Shipping, index_of(K::Payment), 0.9);
  set(K::Shipping, kExit, 0.1);
  set(K::Payment, index_of(K::Confirm), 0.9);
  set(K::Payment, kExit, 0.1);
  set(K::Confirm, kExit, 1.0);
  m.transitions[kExit][kExit] = 1.0;
  for (std::size_t i = 0; i < kKindCount; ++i) m.mean_exec_time[i] = kDefaultExecMs[i] / 1000.0;
  return m;
}

SessionModel SessionModel::single_page(RequestKind kind, Seconds mean_exec) {
  SessionModel m;
  for (std::size_t i = 0; i < kStateCount; ++i) m.transitions[i][kExit] = 1.0;
  for (std::size_t i = 0; i < kKindCount; ++i) m.mean_exec_time[i] = kDefaultExecMs[i] / 1000.0;
  m.mean_exec_time[index_of(kind)] = mean_exec;
  m.start = kind;
  return m;
}

void validate_model(const SessionModel& model) {
  const auto& p = model.transitions;
  for (std::size_t i = 0; i < kStateCount; ++i) {
    for (std::size_t j = 0; j < kStateCount; ++j) {
      if (!(p[i][j] >= 0.0 && p[i][j] <= 1.0)) {
        throw Error(Errc::NegativeEntry, fmt::format("entry {} -> {} is {} (must lie in [0,1])",
                                                     state_name(i), state_name(j), p[i][j]));
      }
    }
  }
  for (std::size_t i = 0; i < kStateCount; ++i) {
    double sum = 0.0;
    for (double x : p[i]) sum += x;
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw Error(Errc::RowNotStochastic,
                  fmt::format("row {} sums to {:.12g}", state_name(i), sum));
    }
  }
  if (p[kExit][kExit] != 1.0) {
    throw Error(Errc::ExitNotAbsorbing,
                fmt::format("Exit -> Exit is {}", p[kExit][kExit]));
  }
  for (std::size_t i = 0; i < kKindCount; ++i) {
    if (!(model.mean_exec_time[i] > 0.0) || !std::isfinite(model.mean_exec_time[i])) {
      throw Error(Errc::ConfigInvalid, fmt::format("mean execution time of {} must be positive",
                                                   state_name(i)));
    }
  }

  // Backward search from Exit over positive-probability edges.
  std::array<bool, kStateCount> reaches{};
  reaches[kExit] = true;
  std::deque<std::size_t> frontier{kExit};
  while (!frontier.empty()) {
    const std::size_t to = frontier.front();
    frontier.pop_front();
    for (std::size_t from = 0; from < kStateCount; ++from) {
      if (!reaches[from] && p[from][to] > 0.0) {
        reaches[from] = true;
        frontier.push_back(from);
      }
    }
  }
  for (std::size_t i = 0; i < kKindCount; ++i) {
    if (!reaches[i]) {
      throw Error(Errc::ExitUnreachable,
                  fmt::format("Exit cannot be reached from {}", state_name(i)));
    }
  }
}

ReachProbabilities compute_reach_probability(const SessionModel& model) {
  // Unknowns are every kind except Confirm, whose value is pinned to 1.
  const std::size_t target = confirm_index();
  std::array<std::size_t, kKindCount - 1> states{};
  for (std::size_t i = 0, n = 0; i < kKindCount; ++i) {
    if (i != target) states[n++] = i;
  }
  constexpr int n = static_cast<int>(kKindCount - 1);
  Eigen::Matrix<double, n, n> a = Eigen::Matrix<double, n, n>::Identity();
  Eigen::Matrix<double, n, 1> b;
  for (int r = 0; r < n; ++r) {
    const auto& row = model.transitions[states[r]];
    b(r) = row[target];
    for (int c = 0; c < n; ++c) a(r, c) -= row[states[c]];
  }
  Eigen::FullPivLU<Eigen::Matrix<double, n, n>> lu(a);
  if (!lu.isInvertible()) {
    throw Error(Errc::SingularSystem, "reach-probability system is singular");
  }
  const Eigen::Matrix<double, n, 1> x = lu.solve(b);

  ReachProbabilities q{};
  q[target] = 1.0;
  for (int r = 0; r < n; ++r) q[states[r]] = std::clamp(x(r), 0.0, 1.0);
  return q;
}

std::array<double, kKindCount> expected_visits(const SessionModel& model) {
  constexpr int n = static_cast<int>(kKindCount);
  Eigen::Matrix<double, n, n> a = Eigen::Matrix<double, n, n>::Identity();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(c, r) -= model.transitions[r][c];  // (I - Q)^T
  }
  Eigen::Matrix<double, n, 1> e = Eigen::Matrix<double, n, 1>::Zero();
  e(static_cast<int>(index_of(model.start))) = 1.0;
  Eigen::FullPivLU<Eigen::Matrix<double, n, n>> lu(a);
  if (!lu.isInvertible()) throw Error(Errc::SingularSystem, "visit-count system is singular");
  const Eigen::Matrix<double, n, 1> v = lu.solve(e);
  std::array<double, kKindCount> out{};
  for (int i = 0; i < n; ++i) out[i] = std::max(0.0, v(i));
  return out;
}

double mean_requests_per_session(const SessionModel& model) {
  double total = 0.0;
  for (double v : expected_visits(model)) total += v;
  return total;
}

Seconds mean_exec_per_request(const SessionModel& model) {
  const auto v = expected_visits(model);
  double work = 0.0, count = 0.0;
  for (std::size_t i = 0; i < kKindCount; ++i) {
    work += v[i] * model.mean_exec_time[i];
    count += v[i];
  }
  return work / count;
}

namespace {

// x ~= mantissa / 10^exponent with `digits` significant digits.
std::pair<double, int> significant_parts(double x, int digits) {
  const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(x))));
  const int exponent = digits - 1 - magnitude;
  const double mantissa = std::round(x * std::pow(10.0, exponent));
  return {mantissa, exponent};
}

}  // namespace

double round_significant(double x, int digits) {
  if (digits <= 0 || x == 0.0 || !std::isfinite(x)) return x;
  auto [mantissa, exponent] = significant_parts(x, digits);
  return exponent >= 0 ? mantissa / std::pow(10.0, exponent) : mantissa * std::pow(10.0, -exponent);
}

UtilityTable derive_utilities(const ReachProbabilities& q, const UtilityScales& scales) {
  if (!(scales.browsing > 0.0) || !(scales.transaction > 0.0)) {
    throw Error(Errc::ConfigInvalid, "utility scales must be positive");
  }
  UtilityTable table;
  table.browsing_scale = scales.browsing;
  table.transaction_scale = scales.transaction;
  for (auto k : kAllKinds) {
    const double scale = is_transaction(k) ? scales.transaction : scales.browsing;
    const double qi = q[index_of(k)];
    double u = qi * scale;
    if (scales.significant_digits > 0 && qi > 0.0) {
      // Scale the integer mantissa so that e.g. 0.027 * 1000 is exactly 27.
      auto [mantissa, exponent] = significant_parts(qi, scales.significant_digits);
      u = exponent >= 0 ? mantissa * scale / std::pow(10.0, exponent)
                        : mantissa * scale * std::pow(10.0, -exponent);
    }
    table.utility[index_of(k)] = u;
  }

  double max_browsing = -1.0, min_transaction = std::numeric_limits<double>::infinity();
  for (auto k : kAllKinds) {
    if (is_transaction(k)) {
      min_transaction = std::min(min_transaction, table.of(k));
    } else {
      max_browsing = std::max(max_browsing, table.of(k));
    }
  }
  if (!(min_transaction > max_browsing)) {
    throw Error(Errc::PriorityInversion,
                fmt::format("lowest transaction utility {} does not exceed highest browsing "
                            "utility {}",
                            min_transaction, max_browsing));
  }
  return table;
}

SessionTrace sample_trace(const SessionModel& model, Engine& rng) {
  SessionTrace trace;
  std::size_t state = index_of(model.start);
  while (state != kExit) {
    trace.requests.push_back(kind_at(state));
    const auto& row = model.transitions[state];
    const double u = uniform01(rng);
    double cumulative = 0.0;
    std::size_t next = kExit;
    std::size_t last_positive = kExit;
    for (std::size_t j = 0; j < kStateCount; ++j) {
      if (row[j] <= 0.0) continue;
      last_positive = j;
      cumulative += row[j];
      if (u < cumulative) {
        next = j;
        break;
      }
    }
    // Rounding in the row sum can leave u just above the last bucket.
    state = cumulative > u ? next : last_positive;
  }
  return trace;
}

std::vector<SessionTrace> generate_trace_pool(const SessionModel& model, std::size_t pool_size,
                                              std::uint64_t seed) {
  const RngStreams streams(seed);
  std::vector<SessionTrace> pool(pool_size);
  const auto n = static_cast<std::int64_t>(pool_size);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    Engine rng = streams.keyed(Stream::Traces, static_cast<std::uint64_t>(i));
    pool[i] = sample_trace(model, rng);
    pool[i].id = static_cast<std::uint64_t>(i);
  }
  return pool;
}

std::vector<SessionTrace> generate_trace_pool_serial(const SessionModel& model,
                                                     std::size_t pool_size, std::uint64_t seed) {
  const RngStreams streams(seed);
  std::vector<SessionTrace> pool;
  pool.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    Engine rng = streams.keyed(Stream::Traces, i);
    pool.push_back(sample_trace(model, rng));
    pool.back().id = i;
  }
  return pool;
}

}  // namespace lifopri
