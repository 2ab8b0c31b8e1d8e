#include "lifopri/rng.hpp"

namespace lifopri {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Engine RngStreams::sequential(Stream s) const {
  return Engine(mix64(master_ ^ mix64(static_cast<std::uint64_t>(s))));
}

Engine RngStreams::keyed(Stream s, std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t h = mix64(master_ ^ mix64(static_cast<std::uint64_t>(s) << 56));
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x5851f42d4c957f2dULL));
  h = mix64(h ^ (c + 0x14057b7ef767814fULL));
  return Engine(h);
}

double uniform01(Engine& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double exponential(Engine& rng, double mean) {
  if (mean <= 0.0) return 0.0;
  return std::exponential_distribution<double>(1.0 / mean)(rng);
}

}  // namespace lifopri
