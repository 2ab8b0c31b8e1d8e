#include "lifopri/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lifopri {

KindCounts& KindCounts::operator+=(const KindCounts& o) {
  generated += o.generated;
  completed += o.completed;
  timed_out += o.timed_out;
  dropped += o.dropped;
  not_generated += o.not_generated;
  return *this;
}

void OutcomeLedger::issue(RequestKind k) { ++counts_[index_of(k)].generated; }

void OutcomeLedger::record(const AttemptOutcome& outcome) {
  if (outcome.id >= resolved_.size()) resolved_.resize(std::max<std::size_t>(outcome.id + 1, resolved_.size() * 2));
  if (resolved_[outcome.id]) {
    throw Error(Errc::DoubleCount, fmt::format("attempt {} resolved twice", outcome.id));
  }
  resolved_[outcome.id] = true;

  auto& c = counts_[index_of(outcome.kind)];
  switch (outcome.resolution) {
    case Resolution::Completed:
      if (outcome.finish_time <= outcome.deadline) {
        ++c.completed;
        samples_.push_back({outcome.kind, outcome.finish_time - outcome.issue_time, outcome.finish_time});
      } else {
        ++c.timed_out;
      }
      break;
    case Resolution::TimedOut: ++c.timed_out; break;
    case Resolution::Dropped: ++c.dropped; break;
  }
}

void OutcomeLedger::record_not_generated(RequestKind k, std::uint64_t n) {
  counts_[index_of(k)].not_generated += n;
}

KindCounts OutcomeLedger::totals(KindSet filter) const {
  KindCounts t;
  for (std::size_t k = 0; k < kKindCount; ++k) {
    if (filter.test(k)) t += counts_[k];
  }
  return t;
}

bool OutcomeLedger::conserved() const {
  return std::all_of(counts_.begin(), counts_.end(),
                     [](const KindCounts& c) { return c.generated == c.resolved(); });
}

Ccdf::Ccdf(std::vector<Seconds> finite_samples, std::uint64_t failures)
    : samples_(std::move(finite_samples)), failures_(failures) {
  std::sort(samples_.begin(), samples_.end());
}

double Ccdf::at(Seconds t) const {
  if (total() == 0) return 0.0;
  const auto above = samples_.end() - std::upper_bound(samples_.begin(), samples_.end(), t);
  return static_cast<double>(static_cast<std::uint64_t>(above) + failures_) / static_cast<double>(total());
}

double Ccdf::infinite_mass() const {
  return total() == 0 ? 0.0 : static_cast<double>(failures_) / static_cast<double>(total());
}

Seconds Ccdf::percentile(double p) const {
  const auto n = total();
  if (n == 0) return 0.0;
  // Rank of the p-th percentile among all attempts, failures last.
  const auto rank = static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(n)));
  if (rank == 0) return samples_.empty() ? 0.0 : samples_.front();
  if (rank > samples_.size()) return std::numeric_limits<Seconds>::infinity();
  return samples_[rank - 1];
}

std::vector<std::pair<Seconds, double>> Ccdf::points() const {
  std::vector<std::pair<Seconds, double>> out;
  out.emplace_back(0.0, at(0.0));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (i + 1 < samples_.size() && samples_[i + 1] == samples_[i]) continue;
    if (samples_[i] > 0.0) out.emplace_back(samples_[i], at(samples_[i]));
  }
  return out;
}

Ccdf ccdf(const OutcomeLedger& ledger, KindSet filter) {
  std::vector<Seconds> finite;
  for (const auto& s : ledger.samples()) {
    if (filter.test(index_of(s.kind))) finite.push_back(s.response);
  }
  const auto t = ledger.totals(filter);
  const std::uint64_t failures = t.timed_out + t.dropped;
  if (finite.empty() && failures == 0) throw Error(Errc::EmptySet, "no resolved attempts match the filter");
  return Ccdf(std::move(finite), failures);
}

SummaryRow summarize(const OutcomeLedger& ledger, KindSet filter) {
  const auto t = ledger.totals(filter);
  const auto total = static_cast<double>(t.intended());
  if (total == 0.0) return {};
  return {100.0 * static_cast<double>(t.completed) / total, 100.0 * static_cast<double>(t.timed_out) / total,
          100.0 * static_cast<double>(t.dropped) / total, 100.0 * static_cast<double>(t.not_generated) / total};
}

double throughput(const OutcomeLedger& ledger, Seconds horizon) {
  if (!(horizon > 0.0)) throw Error(Errc::ConfigInvalid, "horizon must be positive");
  return static_cast<double>(ledger.totals(all_kinds()).completed) / horizon;
}

double throughput(const OutcomeLedger& ledger, Seconds from, Seconds to) {
  if (!(to > from)) throw Error(Errc::ConfigInvalid, "measurement window must be non-empty");
  const auto n = std::count_if(ledger.samples().begin(), ledger.samples().end(), [&](const ResponseSample& s) {
    return s.completed_at >= from && s.completed_at <= to;
  });
  return static_cast<double>(n) / (to - from);
}

double mean_response(const OutcomeLedger& ledger, KindSet filter) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : ledger.samples()) {
    if (!filter.test(index_of(s.kind))) continue;
    sum += s.response;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace lifopri
