#include "bpref/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bpref {

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kUniform:
      return "uniform";
    case ScheduleKind::kDecay:
      return "decay";
    case ScheduleKind::kIncrease:
      return "increase";
  }
  return "uniform";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "uniform") return ScheduleKind::kUniform;
  if (name == "decay") return ScheduleKind::kDecay;
  if (name == "increase") return ScheduleKind::kIncrease;
  throw std::invalid_argument("unknown schedule: " + name);
}

int ScheduleConfig::sessions() const {
  if (session_period <= 0 || horizon <= 0) return 0;
  return static_cast<int>((horizon + session_period - 1) / session_period);
}

std::vector<int> largest_remainder(const std::vector<double>& weights, int total) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(wsum > 0.0)) throw std::invalid_argument("largest_remainder: bad weights");
  std::vector<int> counts(weights.size());
  std::vector<double> frac(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = total * weights[i] / wsum;
    counts[i] = static_cast<int>(std::floor(quota));
    frac[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

namespace {

std::vector<double> shaped_weights(ScheduleKind kind, int n, double period, double T, double p, double c) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * period;
    const double base = kind == ScheduleKind::kDecay ? T / (c * t + T) : (T + c * t) / T;
    w[i] = std::pow(base, p);
  }
  return w;
}

// n * w_0 / sum(w): how much larger the first session is than uniform.
double first_ratio(const std::vector<double>& w) {
  return w.size() * w.front() / std::accumulate(w.begin(), w.end(), 0.0);
}

}  // namespace

std::vector<int> plan(const ScheduleConfig& cfg) {
  const int n = cfg.sessions();
  if (n < 1) throw std::invalid_argument("schedule: need at least one session");
  if (cfg.total_budget < n) throw std::invalid_argument("schedule: budget smaller than session count");
  if (cfg.episode_length <= 0) throw std::invalid_argument("schedule: episode length must be positive");

  if (cfg.kind == ScheduleKind::kUniform || cfg.exponent == 0.0 || n == 1) {
    return largest_remainder(std::vector<double>(n, 1.0), cfg.total_budget);
  }
  const double T = cfg.episode_length;
  const double K = static_cast<double>(cfg.session_period);
  const double target = cfg.kind == ScheduleKind::kDecay ? cfg.decay_first_factor : cfg.increase_first_factor;
  // first_ratio is monotone in c (increasing for decay, decreasing for
  // increase); bisect on log c. Targets out of reach saturate at the bound.
  double lo = -30.0;
  double hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = first_ratio(shaped_weights(cfg.kind, n, K, T, cfg.exponent, std::exp(mid)));
    const bool too_small = cfg.kind == ScheduleKind::kDecay ? r < target : r > target;
    (too_small ? lo : hi) = mid;
  }
  return largest_remainder(shaped_weights(cfg.kind, n, K, T, cfg.exponent, std::exp(0.5 * (lo + hi))),
                           cfg.total_budget);
}

}  // namespace bpref
