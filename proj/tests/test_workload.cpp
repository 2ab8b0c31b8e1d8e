#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "lifopri/model_io.hpp"
#include "lifopri/workload.hpp"

using namespace lifopri;

namespace {

Errc code_of(const SessionModel& m) {
  try {
    validate_model(m);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("model unexpectedly valid");
  return Errc::ConfigInvalid;
}

// q by fixed-point iteration of q <- P q from q = indicator(Confirm); converges
// because every state drains into Exit.
std::array<double, kKindCount> iterate_reach(const SessionModel& m) {
  std::array<double, kStateCount> q{};
  const auto confirm = index_of(RequestKind::Confirm);
  for (int it = 0; it < 20000; ++it) {
    std::array<double, kStateCount> next{};
    for (std::size_t i = 0; i < kKindCount; ++i) {
      if (i == confirm) {
        next[i] = 1.0;
        continue;
      }
      for (std::size_t j = 0; j < kStateCount; ++j) next[i] += m.transitions[i][j] * q[j];
    }
    q = next;
  }
  std::array<double, kKindCount> out{};
  for (std::size_t i = 0; i < kKindCount; ++i) out[i] = q[i];
  return out;
}

std::vector<RequestKind> kinds_of_class(RequestClass c) {
  std::vector<RequestKind> out;
  for (auto k : kAllKinds) {
    if (class_of(k) == c) out.push_back(k);
  }
  return out;
}

bool contains(const SessionTrace& t, RequestKind k) {
  return std::find(t.requests.begin(), t.requests.end(), k) != t.requests.end();
}

// Random chain where every row can reach Exit; transactions keep the sequenced
// structure so the trace invariants still apply.
SessionModel random_model(Engine& rng) {
  SessionModel m;
  for (auto& row : m.transitions) row.fill(0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    auto& row = m.transitions[i];
    for (std::size_t j = 0; j < 4; ++j) row[j] = j == i ? 0.0 : uniform01(rng);
    row[kExit] = 0.2 + uniform01(rng);
    if (i == 3) row[index_of(RequestKind::Login)] = 0.05 + uniform01(rng);
    double sum = 0.0;
    for (double p : row) sum += p;
    for (double& p : row) p /= sum;
  }
  for (std::size_t i = 4; i < 7; ++i) {
    const double advance = 0.5 + 0.5 * uniform01(rng);
    m.transitions[i][i + 1] = advance;
    m.transitions[i][kExit] = 1.0 - advance;
  }
  m.transitions[7][kExit] = 1.0;
  m.transitions[kExit][kExit] = 1.0;
  for (std::size_t i = 0; i < kKindCount; ++i) m.mean_exec_time[i] = 0.1 + uniform01(rng);
  return m;
}

}  // namespace

TEST_CASE("request types carry the stock execution times") {
  const auto m = SessionModel::default_store();
  const double ms[] = {200, 300, 300, 222, 280, 420, 500, 300};
  for (auto k : kAllKinds) CHECK(m.mean_exec(k) * 1000.0 == doctest::Approx(ms[index_of(k)]));
  CHECK(class_of(RequestKind::Details) == RequestClass::Browsing);
  CHECK(class_of(RequestKind::Login) == RequestClass::Transaction);
  CHECK(label(RequestKind::Confirm) == "Tr-4");
  CHECK(parse_state("Br-3") == index_of(RequestKind::Search));
  CHECK(parse_state("Exit") == kExit);
  CHECK_FALSE(parse_state("Br-9"));
}

TEST_CASE("validate_model") {
  SUBCASE("default chain rows sum to one and it validates") {
    const auto m = SessionModel::default_store();
    for (const auto& row : m.transitions) {
      double s = 0.0;
      for (double p : row) s += p;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < kKindCount; ++i) CHECK(m.transitions[i][i] == 0.0);
    CHECK_NOTHROW(validate_model(m));
  }
  SUBCASE("trapping loop") {
    auto m = SessionModel::default_store();
    auto& row = m.transitions[index_of(RequestKind::Main)];
    row.fill(0.0);
    row[index_of(RequestKind::Main)] = 1.0;
    CHECK(code_of(m) == Errc::ExitUnreachable);
  }
  SUBCASE("row short of one") {
    auto m = SessionModel::default_store();
    m.transitions[index_of(RequestKind::Browse)][kExit] -= 0.1;
    CHECK(code_of(m) == Errc::RowNotStochastic);
  }
  SUBCASE("negative entry") {
    auto m = SessionModel::default_store();
    m.transitions[index_of(RequestKind::Browse)][kExit] += 0.1;
    m.transitions[index_of(RequestKind::Browse)][index_of(RequestKind::Search)] -= 0.2;
    m.transitions[index_of(RequestKind::Browse)][index_of(RequestKind::Details)] += 0.1;
    CHECK(code_of(m) == Errc::NegativeEntry);
  }
  SUBCASE("exit must absorb") {
    auto m = SessionModel::default_store();
    m.transitions[kExit][kExit] = 0.0;
    m.transitions[kExit][0] = 1.0;
    CHECK(code_of(m) == Errc::ExitNotAbsorbing);
  }
  SUBCASE("zero execution time") {
    auto m = SessionModel::default_store();
    m.mean_exec_time[2] = 0.0;
    CHECK(code_of(m) == Errc::ConfigInvalid);
  }
}

TEST_CASE("reach probabilities of the default chain") {
  const auto m = SessionModel::default_store();
  const auto q = compute_reach_probability(m);
  const auto oracle = iterate_reach(m);
  for (std::size_t i = 0; i < kKindCount; ++i) CHECK(q[i] == doctest::Approx(oracle[i]).epsilon(1e-9));

  const double expected[] = {0.027, 0.022, 0.036, 0.073, 0.729, 0.81, 0.90, 1.0};
  for (std::size_t i = 0; i < kKindCount; ++i) CHECK(std::abs(q[i] - expected[i]) < 1e-3);
  CHECK(q[index_of(RequestKind::Confirm)] == 1.0);
}

TEST_CASE("reach probability of a chain that never reaches Confirm is zero") {
  const auto m = SessionModel::single_page(RequestKind::Main, 0.29);
  const auto q = compute_reach_probability(m);
  CHECK(q[index_of(RequestKind::Main)] == 0.0);
  CHECK(q[index_of(RequestKind::Confirm)] == 1.0);
}

TEST_CASE("derive_utilities reproduces the stock utility table") {
  const auto u = derive_utilities(compute_reach_probability(SessionModel::default_store()), UtilityScales{});
  const double table[] = {27, 22, 36, 73, 3650, 4050, 4500, 5000};
  for (std::size_t i = 0; i < kKindCount; ++i) CHECK(u.utility[i] == table[i]);

  CHECK(u.of(RequestKind::Login) < u.of(RequestKind::Shipping));
  CHECK(u.of(RequestKind::Shipping) < u.of(RequestKind::Payment));
  CHECK(u.of(RequestKind::Payment) < u.of(RequestKind::Confirm));
  for (auto b : kinds_of_class(RequestClass::Browsing)) {
    for (auto t : kinds_of_class(RequestClass::Transaction)) CHECK(u.of(t) > u.of(b));
  }
}

TEST_CASE("derive_utilities rejects scales that invert priority") {
  ReachProbabilities q;
  q.fill(0.5);
  UtilityScales s{10, 10, 2};
  try {
    derive_utilities(q, s);
    FAIL("expected PriorityInversion");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PriorityInversion);
  }
}

TEST_CASE("single significant-digit rounding") {
  CHECK(round_significant(0.0270306, 2) == 0.027);
  CHECK(round_significant(0.7290, 2) == 0.73);
  CHECK(round_significant(0.0, 2) == 0.0);
  CHECK(round_significant(123456.0, 3) == 123000.0);
}

TEST_CASE("trace pool basics") {
  SUBCASE("single-page chain") {
    const auto pool = generate_trace_pool(SessionModel::single_page(RequestKind::Main, 0.2), 50, 9);
    for (const auto& t : pool) CHECK(t.requests == std::vector<RequestKind>{RequestKind::Main});
  }
  SUBCASE("same seed, same pool; parallel matches serial") {
    const auto m = SessionModel::default_store();
    const auto a = generate_trace_pool(m, 5000, 42);
    const auto b = generate_trace_pool(m, 5000, 42);
    const auto c = generate_trace_pool_serial(m, 5000, 42);
    const auto d = generate_trace_pool(m, 5000, 43);
    REQUIRE(a.size() == 5000);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].requests == b[i].requests);
      CHECK(a[i].requests == c[i].requests);
      CHECK(a[i].id == i);
      differs = differs || a[i].requests != d[i].requests;
    }
    CHECK(differs);
  }
}

TEST_CASE("trace invariants hold over a large pool") {
  const auto m = SessionModel::default_store();
  const auto pool = generate_trace_pool(m, 20000, 3);
  for (const auto& t : pool) {
    REQUIRE_FALSE(t.requests.empty());
    CHECK(t.requests.front() == m.start);
    bool in_tx = false;
    std::size_t next_tx = index_of(RequestKind::Login);
    for (std::size_t i = 0; i < t.requests.size(); ++i) {
      const auto k = t.requests[i];
      if (i > 0) CHECK(m.transitions[index_of(t.requests[i - 1])][index_of(k)] > 0.0);
      if (is_transaction(k)) {
        in_tx = true;
        CHECK(index_of(k) == next_tx++);
      } else {
        CHECK_FALSE(in_tx);
      }
    }
  }
}

TEST_CASE("Monte Carlo reach frequency matches the linear solve") {
  const auto m = SessionModel::default_store();
  const auto pool = generate_trace_pool(m, 100000, 11);
  std::size_t hits = 0;
  for (const auto& t : pool) hits += contains(t, RequestKind::Confirm);
  const double freq = static_cast<double>(hits) / pool.size();
  const double q = compute_reach_probability(m)[index_of(m.start)];
  CHECK(std::abs(freq - q) <= 0.003);
  CHECK(std::abs(freq - q) <= 3.0 * std::sqrt(q * (1 - q) / pool.size()));
}

TEST_CASE("Monte Carlo agreement on random chains") {
  Engine rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = random_model(rng);
    m.start = kind_at(trial % 4);
    REQUIRE_NOTHROW(validate_model(m));
    const auto q = compute_reach_probability(m);
    const auto oracle = iterate_reach(m);
    for (std::size_t i = 0; i < kKindCount; ++i) CHECK(q[i] == doctest::Approx(oracle[i]).epsilon(1e-9));

    const auto pool = generate_trace_pool(m, 100000, 100 + trial);
    double hits = 0, length = 0;
    for (const auto& t : pool) {
      hits += contains(t, RequestKind::Confirm);
      length += t.requests.size();
    }
    const double n = pool.size();
    const double qs = q[index_of(m.start)];
    CHECK(std::abs(hits / n - qs) <= 3.0 * std::sqrt(qs * (1 - qs) / n) + 1e-12);
    CHECK(length / n == doctest::Approx(mean_requests_per_session(m)).epsilon(0.02));
  }
}

TEST_CASE("expected visits and mean execution time") {
  const auto m = SessionModel::default_store();
  const auto pool = generate_trace_pool(m, 100000, 5);
  std::array<double, kKindCount> visits{};
  for (const auto& t : pool) {
    for (auto k : t.requests) visits[index_of(k)] += 1.0;
  }
  const auto ev = expected_visits(m);
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < kKindCount; ++i) {
    CHECK(visits[i] / pool.size() == doctest::Approx(ev[i]).epsilon(0.03));
    total += ev[i];
    weighted += ev[i] * m.mean_exec_time[i];
  }
  CHECK(ev[index_of(RequestKind::Main)] == doctest::Approx(1.0));
  CHECK(mean_requests_per_session(m) == doctest::Approx(total));
  CHECK(mean_exec_per_request(m) == doctest::Approx(weighted / total));
}

TEST_CASE("model files round-trip") {
  const auto m = SessionModel::default_store();
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.transitions == m.transitions);
  CHECK(back.mean_exec_time == m.mean_exec_time);
  CHECK(back.start == m.start);
  CHECK(back.scales.browsing == m.scales.browsing);
  CHECK(back.scales.transaction == m.scales.transaction);
  CHECK(back.scales.significant_digits == m.scales.significant_digits);

  const auto dir = std::filesystem::temp_directory_path() / "lifopri_model_rt";
  std::filesystem::create_directories(dir);
  save_model(dir / "m.model", m);
  const auto loaded = load_model(dir / "m.model");
  CHECK(loaded.transitions == m.transitions);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bundled chain file matches the built-in default") {
  const auto m = load_model(std::filesystem::path(LIFOPRI_SOURCE_DIR) / "scenarios" / "default_chain.model");
  const auto d = SessionModel::default_store();
  for (std::size_t i = 0; i < kStateCount; ++i) {
    for (std::size_t j = 0; j < kStateCount; ++j) CHECK(m.transitions[i][j] == doctest::Approx(d.transitions[i][j]));
  }
  CHECK(m.mean_exec_time == d.mean_exec_time);
}

TEST_CASE("malformed model files") {
  nlohmann::json j = model_to_json(SessionModel::default_store());
  j["transitions"]["Br-7"] = {{"Exit", 1.0}};
  CHECK_THROWS_AS(model_from_json(j), Error);
  j = model_to_json(SessionModel::default_store());
  j["format"] = "something-else/2";
  CHECK_THROWS_AS(model_from_json(j), Error);
  CHECK_THROWS_AS(load_model("/nonexistent/path.model"), Error);
}
