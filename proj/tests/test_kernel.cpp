#include <doctest.h>

#include <algorithm>
#include <map>

#include "lifopri/kernel.hpp"

using namespace lifopri;

namespace {

UtilityTable stock_utilities() {
  return derive_utilities(compute_reach_probability(SessionModel::default_store()), UtilityScales{});
}

std::vector<QueueSpec> specs_of(const QueueBank& bank) {
  std::vector<QueueSpec> out;
  for (std::size_t q = 0; q < bank.queue_count(); ++q) out.push_back(bank.spec(q));
  return out;
}

// A store workload at roughly `rho` times the CPU ceiling.
RunConfig store_config(double rho, QueueRule browsing, bool multi, std::uint64_t seed = 1) {
  RunConfig c;
  c.model = SessionModel::default_store();
  c.pool_size = 500;
  const double ceiling = 1.0 / (mean_exec_per_request(c.model) * c.profile.busy_fraction);
  c.session_rate = rho * ceiling / mean_requests_per_session(c.model);
  c.horizon = 600.0;
  c.seed = seed;
  c.queues = multi ? specs_of(QueueBank::per_kind(stock_utilities(), 50, 25, browsing))
                   : specs_of(QueueBank::single_queue(100, browsing));
  c.detailed_logs = true;
  return c;
}

bool same(const OutcomeLedger& a, const OutcomeLedger& b) {
  for (auto k : kAllKinds) {
    const auto &x = a.counts(k), &y = b.counts(k);
    if (x.generated != y.generated || x.completed != y.completed || x.timed_out != y.timed_out ||
        x.dropped != y.dropped || x.not_generated != y.not_generated) {
      return false;
    }
  }
  if (a.samples().size() != b.samples().size()) return false;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    if (a.samples()[i].response != b.samples()[i].response) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("event calendar ordering") {
  EventQueue q;
  q.schedule(3.0, EventKind::Timeout, 3);
  q.schedule(1.0, EventKind::Timeout, 1);
  q.schedule(2.0, EventKind::Timeout, 2);
  q.schedule(2.0, EventKind::RequestIssue, 22);
  CHECK(q.next_event()->payload == 1);
  CHECK(q.clock() == 1.0);
  CHECK(q.next_event()->payload == 2);
  CHECK(q.next_event()->payload == 22);
  CHECK(q.next_event()->payload == 3);
  CHECK_FALSE(q.next_event());
  try {
    q.schedule(2.0, EventKind::Timeout);
    FAIL("expected SchedulePast");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SchedulePast);
  }
}

TEST_CASE("no arrivals, no activity") {
  auto c = store_config(1.0, QueueRule::Fifo, false);
  c.session_rate = 0.0;
  const auto r = run(c);
  CHECK(r.sessions.arrived == 0);
  const auto t = r.ledger.totals(all_kinds());
  CHECK(t.generated == 0);
  CHECK(t.completed == 0);
  CHECK(t.not_generated == 0);
  CHECK(r.busy_time == 0.0);
  CHECK(r.switches.empty());
}

TEST_CASE("invalid configurations are rejected") {
  auto c = store_config(1.0, QueueRule::Fifo, false);
  c.horizon = -1.0;
  CHECK_THROWS_AS(run(c), Error);
  c = store_config(1.0, QueueRule::Fifo, false);
  c.queues.clear();
  CHECK_THROWS_AS(run(c), Error);
  c = store_config(1.0, QueueRule::Fifo, false);
  c.workers = 0;
  CHECK_THROWS_AS(run(c), Error);
}

TEST_CASE("same config and seed give identical results") {
  const auto c = store_config(1.3, QueueRule::Adaptive, true, 9);
  const auto a = run(c);
  const auto b = run(c);
  CHECK(same(a.ledger, b.ledger));
  CHECK(a.events == b.events);
  CHECK(a.end_time == b.end_time);
  CHECK(a.switches.size() == b.switches.size());
  const auto other = run(store_config(1.3, QueueRule::Adaptive, true, 10));
  CHECK_FALSE(same(a.ledger, other.ledger));
}

TEST_CASE("run invariants across loads and schemes") {
  for (double rho : {0.5, 0.9, 1.4, 2.0}) {
    for (int scheme = 0; scheme < 3; ++scheme) {
      CAPTURE(rho);
      CAPTURE(scheme);
      const auto c = scheme == 0 ? store_config(rho, QueueRule::Fifo, false)
                                 : store_config(rho, scheme == 1 ? QueueRule::Fifo : QueueRule::Adaptive, true);
      const auto r = run(c);

      // Conservation per kind and per session.
      CHECK(r.ledger.conserved());
      CHECK(r.sessions.conservation_violations == 0);
      CHECK(r.sessions.trace_requests == r.sessions.issued_positions + r.sessions.not_generated);
      CHECK(r.sessions.arrived == r.sessions.completed + r.sessions.aborted);
      CHECK(r.ledger.totals(all_kinds()).not_generated == r.sessions.not_generated);

      // Work conservation and the CPU ceiling.
      CHECK(r.idle_with_backlog == 0);
      CHECK(r.busy_time <= r.end_time + 1e-9);
      CHECK(r.end_time >= r.horizon);

      // Every attempt resolved exactly once, bounded retries, causal order.
      std::map<std::pair<SessionId, std::uint32_t>, int> chain;
      std::map<SessionId, std::vector<const AttemptRecord*>> by_session;
      for (const auto& a : r.attempts) {
        CHECK(a.resolution.has_value());
        CHECK(a.request.deadline > a.request.issue_time);
        CHECK(a.request.attempt <= c.retry.max_retries);
        chain[{a.request.session, a.request.position}]++;
        by_session[a.request.session].push_back(&a);
        if (a.resolution == Resolution::Completed) CHECK(*a.served_at <= a.request.deadline);
      }
      for (const auto& [key, n] : chain) CHECK(n <= 1 + c.retry.max_retries);
      for (const auto& [sid, list] : by_session) {
        for (std::size_t i = 1; i < list.size(); ++i) {
          CHECK(list[i]->request.issue_time >= list[i - 1]->request.issue_time);
          if (list[i]->request.position != list[i - 1]->request.position) {
            CHECK(list[i]->request.position == list[i - 1]->request.position + 1);
            REQUIRE(list[i - 1]->resolution == Resolution::Completed);
            CHECK(list[i]->request.issue_time >= *list[i - 1]->served_at);
          }
        }
      }

      // Unproductive work is counted, never completed.
      std::uint64_t late = 0;
      for (const auto& a : r.attempts) {
        if (a.served_at && *a.served_at > a.request.deadline) ++late;
      }
      CHECK(late >= r.late_completions);

      // Hysteresis in the switch log.
      for (const auto& s : r.switches) {
        if (s.to == Policy::Lifo) CHECK(s.utilization > c.controller.upper_threshold);
        if (s.to == Policy::Fifo) CHECK(s.utilization < c.controller.lower_threshold);
      }
      for (const auto& u : r.utilization) {
        CHECK(u.utilization >= 0.0);
        CHECK(u.utilization <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("dispatch log replays as N x U argmax") {
  const auto c = store_config(1.5, QueueRule::Adaptive, true, 4);
  const auto r = run(c);
  REQUIRE_FALSE(r.dispatches.empty());
  for (const auto& d : r.dispatches) {
    std::size_t best = 0;
    double best_dp = -1.0;
    bool tx_waiting = false;
    for (std::size_t q = 0; q < r.queues.size(); ++q) {
      const double dp = d.pending[q] * r.queues[q].utility;
      if (dp > best_dp) best = q, best_dp = dp;
      if ((r.queues[q].accepts & kinds_of(RequestClass::Transaction)).any() && d.pending[q] > 0) tx_waiting = true;
    }
    CHECK(d.chosen == best);
    if (tx_waiting) CHECK((r.queues[d.chosen].accepts & kinds_of(RequestClass::Browsing)).none());
  }
}

TEST_CASE("overload keeps browsing in LIFO, light load mostly FIFO") {
  auto lifo_share = [](const SimulationResult& r) {
    double n = 0;
    for (const auto& u : r.utilization) n += u.policy == Policy::Lifo;
    return n / static_cast<double>(r.utilization.size());
  };
  const auto heavy = run(store_config(1.5, QueueRule::Adaptive, true));
  CHECK_FALSE(heavy.switches.empty());
  CHECK(lifo_share(heavy) > 0.8);
  const auto light = run(store_config(0.3, QueueRule::Adaptive, true));
  CHECK(lifo_share(light) < 0.05);
  const auto fixed = run(store_config(1.5, QueueRule::Fifo, true));
  CHECK(fixed.switches.empty());
}

TEST_CASE("schemes see the same arrivals, traces and demands") {
  const auto a = run(store_config(0.4, QueueRule::Fifo, false, 21));
  const auto b = run(store_config(0.4, QueueRule::Adaptive, true, 21));
  CHECK(a.sessions.arrived == b.sessions.arrived);
  CHECK(a.sessions.trace_requests == b.sessions.trace_requests);
  // At light load nothing queues, so each request sees identical service.
  CHECK(a.busy_time == doctest::Approx(b.busy_time).epsilon(1e-9));
}

TEST_CASE("fresh traces differ from the cycled pool but keep invariants") {
  auto c = store_config(1.0, QueueRule::Fifo, false, 2);
  c.trace_mode = TraceMode::Fresh;
  const auto fresh = run(c);
  const auto cycled = run(store_config(1.0, QueueRule::Fifo, false, 2));
  CHECK(fresh.sessions.arrived == cycled.sessions.arrived);
  CHECK(fresh.ledger.conserved());
  CHECK(fresh.sessions.conservation_violations == 0);
}

TEST_CASE("shared pool gives the same result as an internally generated one") {
  auto c = store_config(1.2, QueueRule::Fifo, true, 6);
  const auto own = run(c);
  c.pool = std::make_shared<const std::vector<SessionTrace>>(generate_trace_pool(c.model, c.pool_size, c.seed));
  const auto shared = run(c);
  CHECK(same(own.ledger, shared.ledger));
}

TEST_CASE("single deterministic page at light load") {
  RunConfig c;
  c.model = SessionModel::single_page(RequestKind::Main, 0.29);
  c.profile = PhaseProfile::cpu_only(PhaseDistribution::Deterministic);
  c.queues = specs_of(QueueBank::single_queue(50, QueueRule::Fifo));
  c.timeouts = TimeoutModel::fixed(20.0);
  c.retry = RetryPolicy::none();
  c.session_rate = 0.01;
  c.horizon = 20000.0;
  c.pool_size = 1;
  const auto r = run(c);
  // Arrivals this sparse almost never overlap, so most responses equal the demand.
  std::size_t exact = 0;
  for (const auto& s : r.ledger.samples()) exact += std::abs(s.response - 0.29) < 1e-9;
  CHECK(exact >= r.ledger.samples().size() * 95 / 100);
  CHECK(r.ledger.totals(all_kinds()).completed == r.sessions.arrived);
}

TEST_CASE("retries add attempts beyond the session requests") {
  auto c = store_config(1.6, QueueRule::Fifo, false, 3);
  const auto r = run(c);
  std::uint64_t retries = 0;
  for (const auto& a : r.attempts) retries += a.request.attempt > 0;
  CHECK(retries > 0);
  CHECK(r.ledger.totals(all_kinds()).generated == r.sessions.issued_positions + retries);

  c.retry = RetryPolicy::none();
  const auto none = run(c);
  for (const auto& a : none.attempts) CHECK(a.request.attempt == 0);
}
