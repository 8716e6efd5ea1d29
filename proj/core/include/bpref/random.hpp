#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bpref {

// Every stochastic component owns its own stream. Streams are derived from a
// master seed and a stable name so adding a new stream never shifts another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_name);

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return gauss_(engine_); }
  bool bernoulli(double p) { return unit_(engine_) < p; }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace bpref
