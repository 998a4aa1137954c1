// Seeded random streams. All sampling algorithms are implemented here so
// generated corpora are bit-identical across platforms and library versions.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace edgesim {

// One random stream. Named substreams are derived from a scenario seed so
// adding or removing devices never perturbs the draws of the others.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Marsaglia polar rejection.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Normal centered in [lo, hi] with stddev (hi-lo)/6, rejected to the
  // interval. A degenerate interval returns lo.
  double trunc_normal(double lo, double hi);

  double exponential(double rate);

  // Knuth sampler; large means are split into chunks to avoid underflow.
  std::uint64_t poisson(double mean);

  std::uint64_t next_u64() { return gen_(); }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Mixes a scenario seed with a stream name and index into a substream seed.
std::uint64_t substream_seed(std::uint64_t scenario_seed, std::string_view name,
                             std::uint64_t index = 0);

inline Rng substream(std::uint64_t scenario_seed, std::string_view name,
                     std::uint64_t index = 0) {
  return Rng(substream_seed(scenario_seed, name, index));
}

} // namespace edgesim
