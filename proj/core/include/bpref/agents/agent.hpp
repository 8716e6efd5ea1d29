#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "bpref/envsim.hpp"
#include "bpref/random.hpp"

namespace bpref {

// A trained policy in normalized action space [-1, 1]^action_dim.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual Eigen::VectorXd act(const Eigen::VectorXd& state, bool deterministic) = 0;
};

struct Rollout {
  Trajectory trajectory;
  double true_return = 0.0;
  bool success = false;  // env success predicate at the final state
};

// Runs full episodes; episode e starts from env.reset(seed + e).
std::vector<Rollout> rollout(const Env& env, Agent& agent, int episodes, std::uint64_t seed,
                             bool deterministic = true);

// Uniform random actions, used as a baseline policy.
class RandomAgent final : public Agent {
 public:
  RandomAgent(int action_dim, std::uint64_t seed);
  Eigen::VectorXd act(const Eigen::VectorXd& state, bool deterministic) override;

 private:
  int action_dim_;
  Rng rng_;
};

}  // namespace bpref
