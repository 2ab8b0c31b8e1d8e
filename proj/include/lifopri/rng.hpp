#pragma once

#include <cstdint>
#include <random>

namespace lifopri {

using Engine = std::mt19937_64;

/// Independent random streams of a run. Each stream is either consumed
/// sequentially or forked per entity (session, trace position, attempt) so that
/// a draw for a given request does not depend on the scheduling order. This is
/// what keeps scheme comparisons paired.
enum class Stream : std::uint64_t {
  Arrivals = 1,
  Traces = 2,
  Demands = 3,
  Timeouts = 4,
  Retries = 5,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

class RngStreams {
 public:
  explicit RngStreams(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master() const { return master_; }

  /// Sequential engine for a whole stream.
  Engine sequential(Stream s) const;

  /// Engine dedicated to one entity of a stream.
  Engine keyed(Stream s, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

 private:
  std::uint64_t master_;
};

double uniform01(Engine& rng);
double exponential(Engine& rng, double mean);

}  // namespace lifopri
