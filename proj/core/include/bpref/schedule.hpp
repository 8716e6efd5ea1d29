#pragma once

#include <string>
#include <vector>

namespace bpref {

enum class ScheduleKind { kUniform, kDecay, kIncrease };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& name);

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::kUniform;
  int total_budget = 100;
  long session_period = 1000;  // K, agent steps between sessions
  int episode_length = 100;    // T
  long horizon = 10000;        // steps covered by feedback sessions
  // Shape exponent on the decay/increase weight; 0 reproduces uniform.
  double exponent = 1.0;
  // Ratio of the first session to the uniform count (decay 2x, increase 0.5x).
  double decay_first_factor = 2.0;
  double increase_first_factor = 0.5;

  int sessions() const;  // ceil(horizon / K)
};

// Per-session query counts summing exactly to total_budget. Session i starts
// at t_i = i * K. Decay weights are (T / (c t_i + T))^p and increase weights
// ((T + c t_i) / T)^p with the time scale c chosen so the first session gets
// the configured factor of the uniform count. Largest-remainder rounding.
std::vector<int> plan(const ScheduleConfig& config);

// Integer apportionment of `total` proportional to `weights`; remainders go
// to the largest fractional parts, earlier sessions first on ties.
std::vector<int> largest_remainder(const std::vector<double>& weights, int total);

}  // namespace bpref
