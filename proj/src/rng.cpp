#include "edgesim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace edgesim {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::trunc_normal(double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("trunc_normal: lo > hi");
  if (lo == hi) return lo;
  const double mean = 0.5 * (lo + hi);
  const double sd = (hi - lo) / 6.0;
  for (;;) {
    const double x = normal(mean, sd);
    if (x >= lo && x <= hi) return x;
  }
}

double Rng::exponential(double rate) {
  if (rate <= 0.0) throw std::invalid_argument("exponential: rate <= 0");
  double u;
  do {
    u = uniform();
  } while (u == 0.0);
  return -std::log(u) / rate;
}

std::uint64_t Rng::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
  std::uint64_t total = 0;
  // exp(-500) is still representable; chunking keeps L away from underflow.
  while (mean > 500.0) {
    total += poisson(500.0);
    mean -= 500.0;
  }
  const double limit = std::exp(-mean);
  double prod = uniform();
  while (prod > limit) {
    ++total;
    prod *= uniform();
  }
  return total;
}

namespace {
// FNV-1a over the stream name, then splitmix64 finalization.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
} // namespace

std::uint64_t substream_seed(std::uint64_t scenario_seed, std::string_view name,
                             std::uint64_t index) {
  std::uint64_t h = splitmix64(scenario_seed ^ fnv1a(name));
  return splitmix64(h + 0x632be59bd9b4e019ull * (index + 1));
}

} // namespace edgesim
