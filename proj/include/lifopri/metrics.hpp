#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "lifopri/types.hpp"

namespace lifopri {

struct KindCounts {
  std::uint64_t generated = 0;
  std::uint64_t completed = 0;
  std::uint64_t timed_out = 0;
  std::uint64_t dropped = 0;
  std::uint64_t not_generated = 0;

  KindCounts& operator+=(const KindCounts& o);
  std::uint64_t resolved() const { return completed + timed_out + dropped; }
  /// Issued attempts plus requests never issued because their session aborted.
  std::uint64_t intended() const { return generated + not_generated; }
};

enum class Resolution : std::uint8_t { Completed, TimedOut, Dropped };

struct AttemptOutcome {
  AttemptId id = 0;
  RequestKind kind = RequestKind::Main;
  Resolution resolution = Resolution::Completed;
  Seconds issue_time = 0.0;
  /// Completion time for Completed outcomes.
  Seconds finish_time = 0.0;
  Seconds deadline = 0.0;
};

struct ResponseSample {
  RequestKind kind = RequestKind::Main;
  Seconds response = 0.0;
  Seconds completed_at = 0.0;
};

/// Per-kind outcome counters plus the response times of in-time completions.
class OutcomeLedger {
 public:
  void issue(RequestKind k);
  /// Resolves one attempt. A completion after its deadline counts as timed
  /// out and leaves no sample. Throws DoubleCount if the attempt was resolved.
  void record(const AttemptOutcome& outcome);
  void record_not_generated(RequestKind k, std::uint64_t n = 1);

  const KindCounts& counts(RequestKind k) const { return counts_[index_of(k)]; }
  KindCounts totals(KindSet filter) const;
  const std::vector<ResponseSample>& samples() const { return samples_; }
  /// generated == completed + timed_out + dropped for every kind.
  bool conserved() const;

 private:
  std::array<KindCounts, kKindCount> counts_{};
  std::vector<ResponseSample> samples_;
  std::vector<bool> resolved_;
};

/// Unconditional complementary distribution of response time: failed
/// (timed-out or dropped) attempts count as an infinite response.
class Ccdf {
 public:
  Ccdf(std::vector<Seconds> finite_samples, std::uint64_t failures);

  /// P(T > t).
  double at(Seconds t) const;
  /// Mass at infinity: failures / total.
  double infinite_mass() const;
  std::uint64_t total() const { return samples_.size() + failures_; }
  std::uint64_t failures() const { return failures_; }
  /// Smallest t with P(T > t) <= 1 - p; infinity when failures carry that mass.
  Seconds percentile(double p) const;
  /// (t, P(T > t)) at t = 0 and at every distinct sample value.
  std::vector<std::pair<Seconds, double>> points() const;

 private:
  std::vector<Seconds> samples_;
  std::uint64_t failures_;
};

/// Throws EmptySet when the filter matches no resolved attempt.
Ccdf ccdf(const OutcomeLedger& ledger, KindSet filter);

/// Percentages of intended requests (issued attempts + not generated).
struct SummaryRow {
  double completed = 0.0;
  double timed_out = 0.0;
  double dropped = 0.0;
  double not_generated = 0.0;
};

SummaryRow summarize(const OutcomeLedger& ledger, KindSet filter = all_kinds());

/// In-time completions per second over [0, horizon].
double throughput(const OutcomeLedger& ledger, Seconds horizon);
/// In-time completions per second over [from, to].
double throughput(const OutcomeLedger& ledger, Seconds from, Seconds to);

/// Mean response time of in-time completions, or 0 when there are none.
double mean_response(const OutcomeLedger& ledger, KindSet filter = all_kinds());

}  // namespace lifopri
