#include <doctest.h>

#include <cmath>

#include "lifopri/client.hpp"

using namespace lifopri;

TEST_CASE("sample_deadline") {
  Engine rng(3);
  TimeoutModel fixed_think{8.0, 12.0, ThinkDistribution::Fixed};
  CHECK(sample_deadline(fixed_think, 0.0, rng) == doctest::Approx(20.0));
  CHECK(sample_deadline(fixed_think, 5.0, rng) == doctest::Approx(25.0));

  TimeoutModel no_think{8.0, 0.0, ThinkDistribution::Exponential};
  CHECK(sample_deadline(no_think, 1.0, rng) == doctest::Approx(9.0));

  CHECK(sample_deadline(TimeoutModel::fixed(40.0), 2.0, rng) == doctest::Approx(42.0));
  CHECK(std::isinf(sample_deadline(TimeoutModel::infinite(), 0.0, rng)));
  CHECK(TimeoutModel::infinite().is_infinite());
  CHECK_FALSE(TimeoutModel{}.is_infinite());
}

TEST_CASE("exponential think component has the stated mean") {
  Engine rng(17);
  const TimeoutModel tm;
  const int n = 100000;
  double sum = 0.0, min = 1e300;
  for (int i = 0; i < n; ++i) {
    const double d = sample_deadline(tm, 0.0, rng);
    sum += d;
    min = std::min(min, d);
  }
  CHECK(std::abs(sum / n - 20.0) <= 0.15);
  CHECK(min >= 8.0);
}

namespace {

Request attempt(int k) {
  Request r;
  r.id = 7;
  r.session = 3;
  r.kind = RequestKind::Search;
  r.position = 2;
  r.issue_time = 10.0;
  r.deadline = 30.0;
  r.attempt = k;
  return r;
}

}  // namespace

TEST_CASE("on_timeout") {
  Engine rng(1), drng(2);
  SUBCASE("retry budget exhausted") {
    RetryPolicy always{1.0, 5};
    CHECK_FALSE(on_timeout(attempt(5), always, TimeoutModel{}, rng, drng));
  }
  SUBCASE("p = 0 never retries") {
    for (int i = 0; i < 1000; ++i) CHECK_FALSE(on_timeout(attempt(0), RetryPolicy::none(), TimeoutModel{}, rng, drng));
  }
  SUBCASE("a retry is a fresh attempt at the deadline instant") {
    RetryPolicy always{1.0, 5};
    const auto r = on_timeout(attempt(2), always, TimeoutModel{}, rng, drng);
    REQUIRE(r);
    CHECK(r->attempt == 3);
    CHECK(r->issue_time == 30.0);
    CHECK(r->deadline >= 38.0);
    CHECK(r->session == 3);
    CHECK(r->position == 2);
    CHECK(r->kind == RequestKind::Search);
  }
  SUBCASE("retry frequency") {
    const RetryPolicy p;
    CHECK(p.retry_probability == 0.4);
    CHECK(p.max_retries == 5);
    int retries = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) retries += on_timeout(attempt(0), p, TimeoutModel{}, rng, drng).has_value();
    CHECK(std::abs(static_cast<double>(retries) / n - 0.4) <= 0.005);
  }
  SUBCASE("an attempt chain never exceeds 1 + M issues") {
    const RetryPolicy p{0.9, 5};
    for (int chain = 0; chain < 2000; ++chain) {
      Request r = attempt(0);
      int issues = 1;
      while (auto next = on_timeout(r, p, TimeoutModel{}, rng, drng)) {
        r = *next;
        ++issues;
      }
      CHECK(issues <= 6);
      CHECK(r.attempt <= 5);
    }
  }
}

TEST_CASE("on_request_resolved") {
  SUBCASE("single page, success") {
    SessionInstance s;
    s.trace = {RequestKind::Main};
    const auto step = on_request_resolved(s, Outcome::Success, 1.0);
    CHECK_FALSE(step.next);
    CHECK(s.status == SessionStatus::Completed);
    CHECK(s.end_time == 1.0);
  }
  SUBCASE("advance through a trace") {
    SessionInstance s;
    s.trace = {RequestKind::Main, RequestKind::Details, RequestKind::Login};
    auto step = on_request_resolved(s, Outcome::Success, 1.0);
    CHECK(step.next == RequestKind::Details);
    CHECK(s.cursor == 1);
    step = on_request_resolved(s, Outcome::Success, 2.0);
    CHECK(step.next == RequestKind::Login);
    CHECK(s.status == SessionStatus::Active);
  }
  SUBCASE("failure at the third of ten requests") {
    SessionInstance s;
    s.trace.assign(10, RequestKind::Browse);
    on_request_resolved(s, Outcome::Success, 1.0);
    on_request_resolved(s, Outcome::Success, 2.0);
    const auto step = on_request_resolved(s, Outcome::Failure, 3.0);
    CHECK(step.not_generated.size() == 7);
    CHECK(s.status == SessionStatus::Aborted);
    CHECK_FALSE(step.next);
  }
}

TEST_CASE("Poisson session arrivals") {
  SUBCASE("count and inter-arrival moments") {
    Engine rng(99);
    const double horizon = 1e5;
    const auto a = schedule_session_arrivals(1.0, horizon, 1000, rng);
    const double n = static_cast<double>(a.size());
    CHECK(std::abs(n - 1e5) <= 3.0 * std::sqrt(1e5));
    double prev = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].time >= prev);
      CHECK(a[i].time <= horizon);
      CHECK(a[i].trace_index == i % 1000);
      sum += a[i].time - prev;
      prev = a[i].time;
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("a pool of one gives every session the same trace") {
    Engine rng(1);
    for (const auto& x : schedule_session_arrivals(5.0, 100.0, 1, rng)) CHECK(x.trace_index == 0);
  }
  SUBCASE("zero rate") {
    Engine rng(1);
    CHECK(schedule_session_arrivals(0.0, 100.0, 10, rng).empty());
  }
}
