#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bpref/agents/agent.hpp"
#include "bpref/agents/exploration.hpp"
#include "bpref/agents/ppo.hpp"
#include "bpref/agents/sac.hpp"
#include "bpref/reward_model.hpp"
#include "bpref/run_record.hpp"
#include "bpref/sampler.hpp"
#include "bpref/schedule.hpp"
#include "bpref/teacher.hpp"

namespace bpref {

// pebble: off-policy learner on the learned reward with relabeling.
// prefppo: on-policy learner on the learned reward.
// sac_gt / ppo_gt: the same learners on the ground-truth reward (baselines).
enum class Algo { kPebble, kPrefPpo, kSacGt, kPpoGt };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& name);
bool is_off_policy(Algo a);
bool uses_preferences(Algo a);

struct TrainConfig {
  std::string env = "point_mass";
  Algo algo = Algo::kPebble;
  std::string teacher_name = "oracle";
  TeacherConfig teacher;
  SamplerConfig sampler;
  ScheduleKind schedule = ScheduleKind::kUniform;
  int budget = 100;
  int queries_per_session = 10;
  long feedback_period = 1000;  // K
  int segment_length = 25;      // H
  int segment_stride = 0;       // 0 -> H (non-overlapping)
  long total_steps = 20000;     // includes pretraining
  long eval_period = 2000;
  int eval_episodes = 10;
  std::size_t replay_capacity = 100000;
  SacConfig sac;
  PpoConfig ppo;
  RewardModelConfig reward;
  ExplorationConfig exploration;
  bool reward_cold_start = false;   // re-initialize the ensemble every session
  int reward_member = -1;           // -1: ensemble mean feeds the agent
  bool reset_critic_after_pretrain = true;
  std::uint64_t seed = 0;

  void validate() const;
  int sessions() const;
};

struct TrainResult {
  RunRecord record;
  std::vector<QueryLog> queries;
  std::vector<int> planned_per_session;
  std::vector<int> issued_per_session;
  long truncated_sessions = 0;
  long teacher_ties = 0;
  long teacher_flips = 0;
  // Rollout storage sizes observed right after each session (on-policy only).
  std::vector<std::size_t> rollout_size_after_session;
  std::unique_ptr<RewardEnsemble> ensemble;  // null for ground-truth baselines
  std::unique_ptr<Agent> agent;
};

// Explore-pretrain, then alternate feedback sessions (every K steps, counts
// from the schedule, labels from the scripted teacher, ensemble training,
// relabel or rollout reset) with policy learning. Deterministic in config.
TrainResult train_preference_rl(const TrainConfig& config);

}  // namespace bpref
