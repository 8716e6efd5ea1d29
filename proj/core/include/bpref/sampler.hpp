#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpref/envsim.hpp"
#include "bpref/random.hpp"
#include "bpref/reward_model.hpp"
#include "bpref/teacher.hpp"

namespace bpref {

enum class SamplingScheme {
  kUniform,
  kDisagreement,
  kEntropy,
  kCoverage,
  kDisagreementCoverage,
  kEntropyCoverage,
};

std::string to_string(SamplingScheme s);
SamplingScheme sampling_scheme_from_string(const std::string& name);

struct SamplerConfig {
  SamplingScheme scheme = SamplingScheme::kDisagreement;
  int n_query = 10;
  int n_init = 0;   // 0 -> 10 * n_query
  int n_inter = 0;  // 0 -> 5 * n_query
  std::uint64_t rng_seed = 0;

  int resolved_init() const { return n_init > 0 ? n_init : 10 * n_query; }
  int resolved_inter() const { return n_inter > 0 ? n_inter : 5 * n_query; }
  void validate() const;
};

// Indices into a segment buffer.
struct SegmentPair {
  std::size_t first = 0;
  std::size_t second = 0;
  bool operator==(const SegmentPair&) const = default;
};

// n pairs of distinct segments, each index uniform over the buffer.
std::vector<SegmentPair> sample_uniform(std::size_t buffer_size, std::size_t n, Rng& rng);

// Pool indices of the n largest scores; ties go to the lower index.
std::vector<std::size_t> select_by_score(std::span<const double> scores, std::size_t n);

// Greedy k-center over the columns of `features`, starting at column 0.
std::vector<std::size_t> kcenter_select(const Eigen::MatrixXd& features, std::size_t n);

// Largest distance from any column to its nearest chosen center.
double covering_radius(const Eigen::MatrixXd& features, std::span<const std::size_t> centers);

// Top n_inter by score, then k-center down to n_query. Returned indices refer
// to the original pool.
std::vector<std::size_t> hybrid_select(std::span<const double> scores, const Eigen::MatrixXd& features,
                                       std::size_t n_inter, std::size_t n_query);

// Concat(states of seg0, states of seg1) as one column per pair.
Eigen::MatrixXd pair_features(std::span<const Segment> buffer, std::span<const SegmentPair> pairs);

// Fraction of non-skipped records labelled Equal (0 when there are none).
double equal_label_fraction(std::span<const Preference> labels);
double equal_label_fraction(std::span<const PreferenceRecord> records);

class QuerySampler {
 public:
  explicit QuerySampler(SamplerConfig config);

  // Chooses up to n pairs from the buffer; n overrides config.n_query for
  // this session, and the pool sizes scale with it.
  std::vector<SegmentPair> select(std::span<const Segment> buffer, const RewardEnsemble& ensemble,
                                  std::size_t n);

  const SamplerConfig& config() const { return config_; }
  // Pairs selected in this session that repeat an earlier pair.
  long duplicate_pairs() const { return duplicates_; }

 private:
  SamplerConfig config_;
  Rng rng_;
  long duplicates_ = 0;
};

}  // namespace bpref
