#include "bpref/teacher.hpp"

#include <cmath>
#include <stdexcept>

#include "bpref/numeric.hpp"

namespace bpref {

void TeacherConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("teacher gamma must be in (0, 1]");
  if (!(epsilon_mistake >= 0.0 && epsilon_mistake < 1.0)) {
    throw std::invalid_argument("teacher epsilon_mistake must be in [0, 1)");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("teacher beta must be >= 0 or infinite");
  if (!(delta_skip >= 0.0) || !(delta_equal >= 0.0)) {
    throw std::invalid_argument("teacher thresholds must be >= 0");
  }
  if (!(epsilon_adapt >= 0.0 && epsilon_adapt <= 1.0)) {
    throw std::invalid_argument("teacher epsilon_adapt must be in [0, 1]");
  }
  if (return_window < 1) throw std::invalid_argument("teacher return_window must be >= 1");
}

std::string to_string(Preference p) {
  switch (p) {
    case Preference::kFirst:
      return "first";
    case Preference::kSecond:
      return "second";
    case Preference::kEqual:
      return "equal";
    case Preference::kSkipped:
      return "skipped";
  }
  return "skipped";
}

Preference preference_from_string(const std::string& s) {
  if (s == "first") return Preference::kFirst;
  if (s == "second") return Preference::kSecond;
  if (s == "equal") return Preference::kEqual;
  if (s == "skipped") return Preference::kSkipped;
  throw std::invalid_argument("unknown preference label: " + s);
}

std::optional<std::array<double, 2>> label_target(Preference p) {
  switch (p) {
    case Preference::kFirst:
      return std::array<double, 2>{1.0, 0.0};
    case Preference::kSecond:
      return std::array<double, 2>{0.0, 1.0};
    case Preference::kEqual:
      return std::array<double, 2>{0.5, 0.5};
    case Preference::kSkipped:
      return std::nullopt;
  }
  return std::nullopt;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  // Horner form: the last step gets weight 1.
  double acc = 0.0;
  for (double r : rewards) acc = gamma * acc + r;
  return acc;
}

double discounted_return(const Segment& segment, double gamma) {
  return discounted_return(std::span<const double>(segment.rewards.data(), segment.rewards.size()), gamma);
}

double bradley_terry(double return_i, double return_j, double beta) {
  if (!std::isfinite(return_i) || !std::isfinite(return_j)) {
    throw std::invalid_argument("preference probability: non-finite segment return");
  }
  if (std::isinf(beta)) {
    if (return_i > return_j) return 1.0;
    if (return_i < return_j) return 0.0;
    return 0.5;
  }
  return logistic(beta * (return_i - return_j));
}

double preference_probability(const Segment& seg_i, const Segment& seg_j, double beta, double gamma) {
  if (seg_i.length() != seg_j.length()) {
    throw std::invalid_argument("preference probability: segments differ in length");
  }
  return bradley_terry(discounted_return(seg_i, gamma), discounted_return(seg_j, gamma), beta);
}

double adaptive_threshold(double policy_avg_return, int segment_length, int episode_length,
                          double epsilon_adapt) {
  if (episode_length <= 0 || segment_length > episode_length) {
    throw std::invalid_argument("adaptive threshold requires 0 < H <= T");
  }
  return static_cast<double>(segment_length) / episode_length * policy_avg_return * epsilon_adapt;
}

TeacherConfig teacher_preset(const std::string& name) {
  TeacherConfig c;  // oracle defaults
  if (name == "oracle") return c;
  if (name == "stoc") {
    c.beta = 1.0;
  } else if (name == "mistake") {
    c.epsilon_mistake = 0.1;
  } else if (name == "skip") {
    c.adaptive = AdaptiveThreshold::kSkip;
    c.epsilon_adapt = 0.1;
  } else if (name == "equal") {
    c.adaptive = AdaptiveThreshold::kEqual;
    c.epsilon_adapt = 0.1;
  } else if (name == "myopic") {
    c.gamma = 0.9;
  } else {
    throw std::invalid_argument("unknown teacher preset: " + name);
  }
  return c;
}

std::vector<std::string> teacher_preset_names() {
  return {"oracle", "stoc", "mistake", "skip", "equal", "myopic"};
}

SimTeacher::SimTeacher(TeacherConfig config) : config_(config), rng_(config.rng_seed) {
  config_.validate();
}

double SimTeacher::skip_threshold(const ThresholdContext& ctx) const {
  if (config_.adaptive == AdaptiveThreshold::kSkip) {
    return adaptive_threshold(ctx.policy_avg_return, ctx.segment_length, ctx.episode_length,
                              config_.epsilon_adapt);
  }
  return config_.delta_skip;
}

double SimTeacher::equal_threshold(const ThresholdContext& ctx) const {
  if (config_.adaptive == AdaptiveThreshold::kEqual) {
    return adaptive_threshold(ctx.policy_avg_return, ctx.segment_length, ctx.episode_length,
                              config_.epsilon_adapt);
  }
  return config_.delta_equal;
}

Preference SimTeacher::label(const Segment& seg0, const Segment& seg1, const ThresholdContext& ctx) {
  if (seg0.length() != seg1.length()) {
    throw std::invalid_argument("teacher: segments differ in length");
  }
  // Skip and equal branches use undiscounted sums; gamma only enters sampling.
  // A non-positive skip threshold disables skipping, so tasks with negative
  // rewards are not skipped by the oracle.
  const double sum0 = seg0.true_return();
  const double sum1 = seg1.true_return();
  const double skip = skip_threshold(ctx);
  if (skip > 0.0 && std::max(sum0, sum1) < skip) return Preference::kSkipped;
  if (std::abs(sum1 - sum0) < equal_threshold(ctx)) return Preference::kEqual;

  const double p_first = preference_probability(seg0, seg1, config_.beta, config_.gamma);
  bool first_wins;
  if (std::isinf(config_.beta)) {
    if (p_first == 0.5) {
      ++ties_;
      return Preference::kEqual;
    }
    first_wins = p_first > 0.5;
  } else {
    first_wins = rng_.bernoulli(p_first);
  }
  ++sampled_;
  if (config_.epsilon_mistake > 0.0 && rng_.bernoulli(config_.epsilon_mistake)) {
    ++flips_;
    first_wins = !first_wins;
  }
  return first_wins ? Preference::kFirst : Preference::kSecond;
}

}  // namespace bpref
