#include <doctest.h>

#include <cmath>

#include "lifopri/metrics.hpp"
#include "lifopri/rng.hpp"

using namespace lifopri;

namespace {

struct LedgerBuilder {
  OutcomeLedger ledger;
  AttemptId next = 0;

  AttemptId complete(RequestKind k, Seconds issue, Seconds finish, Seconds deadline = 1e9) {
    ledger.issue(k);
    ledger.record({next, k, Resolution::Completed, issue, finish, deadline});
    return next++;
  }
  AttemptId fail(RequestKind k, Resolution r) {
    ledger.issue(k);
    ledger.record({next, k, r, 0.0, 0.0, 1.0});
    return next++;
  }
};

}  // namespace

TEST_CASE("record") {
  LedgerBuilder b;
  b.complete(RequestKind::Main, 1.0, 3.0, 20.0);
  CHECK(b.ledger.counts(RequestKind::Main).completed == 1);
  REQUIRE(b.ledger.samples().size() == 1);
  CHECK(b.ledger.samples()[0].response == doctest::Approx(2.0));
  CHECK(b.ledger.samples()[0].completed_at == 3.0);

  b.complete(RequestKind::Main, 1.0, 25.0, 20.0);
  CHECK(b.ledger.counts(RequestKind::Main).timed_out == 1);
  CHECK(b.ledger.samples().size() == 1);

  b.ledger.record_not_generated(RequestKind::Login, 4);
  CHECK(b.ledger.counts(RequestKind::Login).not_generated == 4);
  CHECK(b.ledger.conserved());

  try {
    b.ledger.record({0, RequestKind::Main, Resolution::TimedOut, 1.0, 0.0, 20.0});
    FAIL("expected DoubleCount");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DoubleCount);
  }
}

TEST_CASE("conservation detects unresolved attempts") {
  OutcomeLedger l;
  l.issue(RequestKind::Main);
  CHECK_FALSE(l.conserved());
  l.record({0, RequestKind::Main, Resolution::Dropped, 0.0, 0.0, 1.0});
  CHECK(l.conserved());
}

TEST_CASE("ccdf examples") {
  SUBCASE("only failures") {
    LedgerBuilder b;
    for (int i = 0; i < 10; ++i) b.fail(RequestKind::Main, Resolution::TimedOut);
    const auto c = ccdf(b.ledger, all_kinds());
    for (double t : {0.0, 1.0, 1e6}) CHECK(c.at(t) == 1.0);
    CHECK(c.infinite_mass() == 1.0);
    CHECK(std::isinf(c.percentile(0.5)));
  }
  SUBCASE("two samples") {
    LedgerBuilder b;
    b.complete(RequestKind::Main, 0.0, 1.0);
    b.complete(RequestKind::Main, 0.0, 3.0);
    const auto c = ccdf(b.ledger, all_kinds());
    CHECK(c.at(2.0) == 0.5);
    CHECK(c.at(0.5) == 1.0);
    CHECK(c.at(3.0) == 0.0);
    CHECK(c.percentile(0.5) == doctest::Approx(1.0));
    CHECK(c.percentile(1.0) == doctest::Approx(3.0));
  }
  SUBCASE("filters") {
    LedgerBuilder b;
    b.complete(RequestKind::Main, 0.0, 1.0);
    b.fail(RequestKind::Login, Resolution::Dropped);
    CHECK(ccdf(b.ledger, only(RequestKind::Login)).infinite_mass() == 1.0);
    CHECK(ccdf(b.ledger, only(RequestKind::Main)).infinite_mass() == 0.0);
    try {
      ccdf(b.ledger, only(RequestKind::Confirm));
      FAIL("expected EmptySet");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EmptySet);
    }
  }
}

TEST_CASE("ccdf property: monotone, bounded, exact mass at infinity") {
  Engine rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    LedgerBuilder b;
    const int n = 1 + static_cast<int>(uniform01(rng) * 300);
    std::uint64_t failures = 0;
    for (int i = 0; i < n; ++i) {
      const double u = uniform01(rng);
      if (u < 0.2) {
        b.fail(RequestKind::Browse, Resolution::TimedOut);
        ++failures;
      } else if (u < 0.3) {
        b.fail(RequestKind::Browse, Resolution::Dropped);
        ++failures;
      } else {
        b.complete(RequestKind::Browse, 0.0, exponential(rng, 3.0));
      }
    }
    const auto c = ccdf(b.ledger, all_kinds());
    const double mass = static_cast<double>(failures) / n;
    CHECK(c.infinite_mass() == mass);
    CHECK(c.total() == static_cast<std::uint64_t>(n));
    double prev = 1.0;
    for (double t = 0.0; t <= 40.0; t += 0.1) {
      const double v = c.at(t);
      CHECK(v <= prev);
      CHECK(v <= 1.0);
      CHECK(v >= mass);
      prev = v;
    }
    CHECK(c.at(1e12) == mass);
    double last = 1.0;
    for (const auto& [t, v] : c.points()) {
      CHECK(v <= last);
      last = v;
    }
  }
}

TEST_CASE("summarize") {
  SUBCASE("everything completes") {
    LedgerBuilder b;
    for (int i = 0; i < 5; ++i) b.complete(kind_at(i), 0.0, 1.0);
    const auto r = summarize(b.ledger);
    CHECK(r.completed == 100.0);
    CHECK(r.timed_out == 0.0);
    CHECK(r.dropped == 0.0);
    CHECK(r.not_generated == 0.0);
  }
  SUBCASE("only drops") {
    LedgerBuilder b;
    for (int i = 0; i < 5; ++i) b.fail(RequestKind::Main, Resolution::Dropped);
    const auto r = summarize(b.ledger);
    CHECK(r.dropped == 100.0);
    CHECK(r.completed == 0.0);
  }
  SUBCASE("mixed, by class") {
    LedgerBuilder b;
    b.complete(RequestKind::Main, 0.0, 1.0);
    b.fail(RequestKind::Main, Resolution::TimedOut);
    b.fail(RequestKind::Login, Resolution::Dropped);
    b.ledger.record_not_generated(RequestKind::Login, 3);
    const auto all = summarize(b.ledger);
    CHECK(all.completed == doctest::Approx(100.0 / 6));
    CHECK(all.not_generated == doctest::Approx(50.0));
    const auto tx = summarize(b.ledger, kinds_of(RequestClass::Transaction));
    CHECK(tx.dropped == doctest::Approx(25.0));
    CHECK(tx.not_generated == doctest::Approx(75.0));
    const auto none = summarize(b.ledger, only(RequestKind::Confirm));
    CHECK(none.completed == 0.0);
  }
  SUBCASE("rows sum to 100") {
    Engine rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      LedgerBuilder b;
      for (int i = 0; i < 50; ++i) {
        const double u = uniform01(rng);
        if (u < 0.4) b.complete(RequestKind::Search, 0.0, 1.0);
        else if (u < 0.7) b.fail(RequestKind::Search, Resolution::TimedOut);
        else if (u < 0.9) b.fail(RequestKind::Search, Resolution::Dropped);
        else b.ledger.record_not_generated(RequestKind::Search);
      }
      const auto r = summarize(b.ledger);
      CHECK(r.completed + r.timed_out + r.dropped + r.not_generated == doctest::Approx(100.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("throughput") {
  LedgerBuilder b;
  for (int i = 0; i < 560; ++i) b.complete(RequestKind::Main, 0.0, 0.1 * (i + 1) - 0.05);
  CHECK(throughput(b.ledger, 100.0) == doctest::Approx(5.6));
  // 60 of the completions land in [50, 56].
  CHECK(throughput(b.ledger, 50.0, 100.0) == doctest::Approx(1.2));
  CHECK(throughput(OutcomeLedger{}, 100.0) == 0.0);
  CHECK(mean_response(b.ledger) > 0.0);
  CHECK(mean_response(OutcomeLedger{}) == 0.0);
}
