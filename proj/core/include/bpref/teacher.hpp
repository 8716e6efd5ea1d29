#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpref/envsim.hpp"
#include "bpref/random.hpp"

namespace bpref {

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

// Which threshold, if any, tracks the current policy's return.
enum class AdaptiveThreshold { kNone, kSkip, kEqual };

struct TeacherConfig {
  double beta = kInfiniteBeta;  // rationality; +inf selects the deterministic branch
  double gamma = 1.0;           // myopic discount, (0, 1]
  double epsilon_mistake = 0.0; // [0, 1)
  double delta_skip = 0.0;
  double delta_equal = 0.0;
  AdaptiveThreshold adaptive = AdaptiveThreshold::kNone;
  double epsilon_adapt = 0.1;
  int return_window = 10;  // evaluation episodes averaged into R_avg
  std::uint64_t rng_seed = 0;

  void validate() const;
};

enum class Preference { kFirst, kSecond, kEqual, kSkipped };

std::string to_string(Preference p);
Preference preference_from_string(const std::string& s);
// (y0, y1) target distribution; nullopt for skipped queries.
std::optional<std::array<double, 2>> label_target(Preference p);

struct PreferenceRecord {
  Segment seg0;
  Segment seg1;
  Preference label = Preference::kSkipped;
  std::int64_t query_step = 0;
};

// What the adaptive threshold needs to know about the current run.
struct ThresholdContext {
  double policy_avg_return = 0.0;
  int segment_length = 1;  // H
  int episode_length = 1;  // T
};

// sum_{t=1..H} gamma^(H-t) r_t
double discounted_return(std::span<const double> rewards, double gamma);
double discounted_return(const Segment& segment, double gamma);

// P[i > j] for already-discounted returns. Finite beta uses a logistic form
// that never overflows; infinite beta returns 1, 0 or 0.5 on ties.
double bradley_terry(double return_i, double return_j, double beta);
double preference_probability(const Segment& seg_i, const Segment& seg_j, double beta, double gamma);

// (H / T) * R_avg * epsilon_adapt
double adaptive_threshold(double policy_avg_return, int segment_length, int episode_length,
                          double epsilon_adapt);

// oracle | stoc | mistake | skip | equal | myopic
TeacherConfig teacher_preset(const std::string& name);
std::vector<std::string> teacher_preset_names();

// Scripted teacher. Branch order: skip, equal, sample + mistake flip.
class SimTeacher {
 public:
  explicit SimTeacher(TeacherConfig config);

  Preference label(const Segment& seg0, const Segment& seg1, const ThresholdContext& context);

  // Thresholds in effect for a given context (adaptive ones substituted).
  double skip_threshold(const ThresholdContext& context) const;
  double equal_threshold(const ThresholdContext& context) const;

  const TeacherConfig& config() const { return config_; }
  // Exact-tie labels produced by the deterministic branch.
  long tie_count() const { return ties_; }
  // Sampled labels that were flipped by the mistake branch.
  long flip_count() const { return flips_; }
  long sampled_count() const { return sampled_; }

 private:
  TeacherConfig config_;
  Rng rng_;
  long ties_ = 0;
  long flips_ = 0;
  long sampled_ = 0;
};

}  // namespace bpref
