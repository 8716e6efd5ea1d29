#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpref/envsim.hpp"
#include "bpref/reward_model.hpp"
#include "bpref/run_record.hpp"

namespace bpref {

// mean(pref) / mean(gt). Throws when the baseline mean is not positive.
double normalized_return(std::span<const double> pref_returns, std::span<const double> gt_returns);
// Each preference run divided by the baseline mean.
std::vector<double> normalized_scores(std::span<const double> pref_returns, std::span<const double> gt_returns);

double mean(std::span<const double> xs);
double median(std::span<const double> xs);
// Mean after dropping floor(n/4) scores from each end; n >= 4.
double iqm(std::span<const double> scores);
// mean(max(0, target - score))
double optimality_gap(std::span<const double> scores, double target = 1.0);

enum class Metric { kMean, kMedian, kIqm, kOptimalityGap };
std::string to_string(Metric m);
double compute_metric(Metric m, std::span<const double> scores);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
};

// Percentile bootstrap: each resample draws with replacement inside every
// stratum (group of runs) independently, pools the draws, and evaluates the
// statistic. Deterministic in `seed`.
Interval bootstrap_ci(const std::vector<std::vector<double>>& strata,
                      const std::function<double(std::span<const double>)>& statistic, int resamples = 2000,
                      double level = 0.95, std::uint64_t seed = 0);
Interval bootstrap_ci(const std::vector<std::vector<double>>& strata, Metric metric, int resamples = 2000,
                      double level = 0.95, std::uint64_t seed = 0);

// Spearman rank correlation with average ranks for ties; nullopt when either
// series is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct RewardAlignment {
  std::optional<double> rank_correlation;
  std::vector<double> learned;
  std::vector<double> truth;
};

// Per-step learned (ensemble mean) vs ground-truth rewards along rollouts.
RewardAlignment reward_alignment(std::span<const Trajectory> rollouts, const RewardEnsemble& ensemble);

struct MetricSummary {
  std::optional<double> value;
  std::optional<Interval> ci;
};

struct ReportCell {
  std::string env;
  std::string teacher;
  std::string algo;
  int budget = 0;
  std::vector<double> scores;  // normalized per-run scores
  MetricSummary mean;
  MetricSummary median;
  MetricSummary iqm;
  MetricSummary optimality_gap;
};

struct AggregateReport {
  std::vector<ReportCell> cells;
  const ReportCell* find(const std::string& env, const std::string& teacher, const std::string& algo,
                         int budget) const;
};

// Fills every metric and its CI for a cell from its scores. IQM is left empty
// with fewer than four runs.
void summarize_cell(ReportCell& cell, int resamples = 2000, double level = 0.95, std::uint64_t seed = 0);

nlohmann::json to_json(const AggregateReport& report);
AggregateReport report_from_json(const nlohmann::json& j);
// Columns: env,teacher,algo,budget,metric,value,ci_low,ci_high
void write_plot_csv(std::ostream& out, const AggregateReport& report);

}  // namespace bpref
