#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "bpref/agents/ppo.hpp"
#include "bpref/agents/replay_buffer.hpp"
#include "bpref/agents/sac.hpp"
#include "bpref/envsim.hpp"

namespace bpref {

struct ExplorationConfig {
  int k = 5;
  long pretrain_steps = 2000;
  long random_steps = 500;        // uniform-action warm-up inside pretraining
  double distance_floor = 1e-8;   // epsilon_d
  std::size_t max_reference = 10000;  // most recent states used as the k-NN set
};

// log(max(d_k, floor)) where d_k is the Euclidean distance from `state` to its
// k-th nearest neighbour in the columns of `state_set`. One column exactly
// equal to `state` is treated as the query itself and skipped.
double intrinsic_reward(const Eigen::VectorXd& state, const Eigen::MatrixXd& state_set, int k,
                        double distance_floor = 1e-8);
Eigen::VectorXd intrinsic_rewards(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& state_set, int k,
                                  double distance_floor = 1e-8);

struct PretrainResult {
  long steps = 0;
  long episodes = 0;
  std::vector<Trajectory> trajectories;  // completed episodes, in order
};

// Unsupervised phase for the off-policy learner: collect with the current
// policy (uniform actions for the first random_steps), reward minibatches
// with the k-NN state-entropy bonus, and take one SAC step per env step.
// Transitions land in `buffer` with reward_learned = 0.
PretrainResult pretrain(SacAgent& agent, const Env& env, ReplayBuffer& buffer, const ExplorationConfig& cfg,
                        std::uint64_t seed);

// Same phase for the on-policy learner; rollouts are rewarded with the
// bonus against all states seen so far.
PretrainResult pretrain(PpoAgent& agent, const Env& env, const ExplorationConfig& cfg, std::uint64_t seed);

// Trace of the covariance of the columns of `states`.
double state_spread(const Eigen::MatrixXd& states);

}  // namespace bpref
