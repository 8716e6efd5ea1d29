#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "bpref/agents/agent.hpp"
#include "bpref/nn.hpp"
#include "bpref/random.hpp"

namespace bpref {

struct PpoConfig {
  std::vector<int> hidden = {64, 64};
  double learning_rate = 3e-4;
  double discount = 0.99;
  double gae_lambda = 0.92;
  double clip = 0.4;
  int epochs = 10;
  int minibatch_size = 64;
  int rollout_steps = 1000;
  double init_log_std = -0.5;
  bool normalize_advantages = true;
};

// Diagonal Gaussian with a state-independent log std. Actions are not
// squashed; the environment clamps them.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, int action_dim, const std::vector<int>& hidden, double init_log_std);

  Eigen::MatrixXd mean(const Eigen::MatrixXd& states) const { return mean_net_.forward(states); }
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;
  double entropy() const;  // per sample, independent of the state

  Mlp& mean_net() { return mean_net_; }
  const Mlp& mean_net() const { return mean_net_; }
  Eigen::VectorXd& log_std() { return log_std_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }

 private:
  Mlp mean_net_;
  Eigen::VectorXd log_std_;
};

// A_t = delta_t + discount * lambda * (1 - done_t) * A_{t+1}, with
// delta_t = r_t + discount * (1 - terminal_t) * V(s_{t+1}) - V(s_t).
// `done` cuts the recursion at episode boundaries (including time limits);
// `terminal` additionally drops the bootstrap value.
Eigen::VectorXd compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                            const Eigen::VectorXd& next_values, const std::vector<bool>& done,
                            const std::vector<bool>& terminal, double discount, double lambda);

struct PpoBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct PpoLosses {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  MlpGradient mean_gradient;
  Eigen::VectorXd log_std_gradient;
  MlpGradient value_gradient;
};

// Clipped surrogate -mean(min(rho A, clip(rho, 1-eps, 1+eps) A)) and
// mean squared value error, with analytic gradients.
PpoLosses ppo_loss(const GaussianPolicy& policy, const Mlp& value, const PpoBatch& batch, double clip);

// Unclipped surrogate -mean(rho A), for comparison in tests.
double unclipped_surrogate(const GaussianPolicy& policy, const PpoBatch& batch);

// On-policy rollout storage.
struct RolloutStorage {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;  // raw Gaussian samples
  std::vector<Eigen::VectorXd> next_states;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<bool> done;
  std::vector<bool> terminal;

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
  void clear();
};

struct PpoUpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
};

class PpoAgent final : public Agent {
 public:
  PpoAgent(int state_dim, int action_dim, PpoConfig config, std::uint64_t seed);

  // Mean action (clamped) or a raw Gaussian sample.
  Eigen::VectorXd act(const Eigen::VectorXd& state, bool deterministic) override;
  // Raw sample plus its log-probability, for rollout collection.
  Eigen::VectorXd sample(const Eigen::VectorXd& state, double& log_prob);

  PpoBatch make_batch(const RolloutStorage& storage) const;
  PpoUpdateStats update(const RolloutStorage& storage);

  const PpoConfig& config() const { return config_; }
  GaussianPolicy& policy() { return policy_; }
  Mlp& value() { return value_; }

 private:
  int action_dim_;
  PpoConfig config_;
  Rng rng_;
  GaussianPolicy policy_;
  Mlp value_;
  Adam mean_opt_;
  VectorAdam log_std_opt_;
  Adam value_opt_;
};

}  // namespace bpref
