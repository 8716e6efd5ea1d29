#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bpref/agents/trainer.hpp"
#include "bpref/evalstats.hpp"
#include "bpref/run_record.hpp"

namespace bpref {

inline constexpr const char* kOutputEnvVar = "BPREF_OUT";

struct SweepConfig {
  std::vector<std::string> teachers = teacher_preset_names();
  std::vector<int> budgets;  // empty -> {train.budget}
  bool baseline = true;      // also run the ground-truth variant of the algo
  int bootstrap_resamples = 2000;
};

struct ExperimentConfig {
  TrainConfig train;
  std::string teacher_preset = "oracle";
  // Teacher fields applied on top of the preset (keys of the "teacher" object).
  nlohmann::json teacher_overrides = nlohmann::json::object();
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string output_dir;  // empty -> $BPREF_OUT, then "runs"
  int workers = 1;
  int alignment_episodes = 5;
  // "return", "success", or "auto" (success on push, return elsewhere).
  std::string score = "auto";
  SweepConfig sweep;

  void validate() const;
  // TrainConfig for one seed with the teacher preset and overrides resolved.
  TrainConfig train_config(std::uint64_t seed) const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides);
// "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Explicit value, then $BPREF_OUT, then "runs".
std::filesystem::path resolve_output_root(const std::string& explicit_dir);
std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& env,
                                    const std::string& algo, const std::string& teacher, std::uint64_t seed);

struct RunSummary {
  RunRecord record;
  std::filesystem::path dir;
  std::optional<double> reward_alignment;
};

// Trains every seed and writes curve.csv, records.jsonl, config.snapshot and
// summary.json under <root>/<env>/<algo>/<teacher>/seed_<n>/. Config and
// output directory are checked before any training starts.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config);
RunSummary run_single(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& root);

// Every teacher preset at every budget, plus the baseline; writes report.json
// and report.csv at the output root.
AggregateReport sweep_robustness(const ExperimentConfig& config);

// Builds the report from summary.json + curve.csv files found under `root`.
// Preference runs are normalized by the matching ground-truth algo runs of
// the same env.
AggregateReport aggregate_directory(const std::filesystem::path& root, int resamples = 2000,
                                    std::uint64_t seed = 0);

struct LabelStats {
  std::string run;
  long queries = 0;
  double skip_fraction = 0.0;
  double equal_fraction = 0.0;
  // Among forced-choice labels whose discounted returns differ, the fraction
  // contradicting the return ordering.
  std::optional<double> flip_estimate;
};

LabelStats label_stats_from_log(const std::string& run, const std::vector<QueryLog>& log);
std::vector<LabelStats> label_stats(const std::filesystem::path& root);
nlohmann::json to_json(const LabelStats& s);

// Long-format curve table over every run under root:
// env,algo,teacher,budget,seed,<curve columns>
void write_curve_table(std::ostream& out, const std::filesystem::path& root);

}  // namespace bpref
