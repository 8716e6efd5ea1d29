#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

#include "bpref/agents/agent.hpp"
#include "bpref/agents/replay_buffer.hpp"
#include "bpref/nn.hpp"
#include "bpref/random.hpp"

namespace bpref {

struct SacConfig {
  std::vector<int> hidden = {64, 64};
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha = 0.1;     // fixed temperature
  double discount = 0.99;
  double tau = 0.005;
  int target_update_period = 2;
  int actor_update_period = 1;
  int batch_size = 128;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
};

// Diagonal Gaussian policy squashed through tanh. The network emits
// [mean; raw_log_std] and raw_log_std is mapped into [log_std_min, log_std_max].
class SquashedGaussianActor {
 public:
  // Everything backward() needs from a reparameterized sample.
  struct Sample {
    Eigen::MatrixXd actions;   // tanh(u), action_dim x B
    Eigen::VectorXd log_prob;  // B
    Eigen::MatrixXd noise;     // epsilon
    Eigen::MatrixXd std;
    Eigen::MatrixXd raw_log_std;
    Mlp::Tape tape;
  };

  SquashedGaussianActor() = default;
  SquashedGaussianActor(int state_dim, int action_dim, const std::vector<int>& hidden,
                        double log_std_min, double log_std_max);

  // Reparameterized sample a = tanh(mean + std * noise).
  Sample sample(const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise) const;
  Eigen::MatrixXd mean_action(const Eigen::MatrixXd& states) const;

  // Accumulates parameter gradients for upstream dL/da and dL/dlog_prob.
  void backward(const Sample& s, const Eigen::MatrixXd& grad_actions, const Eigen::VectorXd& grad_log_prob,
                MlpGradient& grad) const;

  int action_dim() const { return action_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  int action_dim_ = 0;
  double log_std_min_ = -5.0;
  double log_std_max_ = 2.0;
  Mlp net_;
};

struct CriticLoss {
  double loss = 0.0;  // sum of the two critics' mean squared residuals
  std::array<MlpGradient, 2> gradients;
  Eigen::VectorXd targets;
};

struct ActorLoss {
  double loss = 0.0;
  double entropy = 0.0;  // -mean log pi
  MlpGradient gradient;
};

struct SacUpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  bool actor_updated = false;
};

// Off-policy maximum-entropy actor-critic with twin critics, min backup and
// exponentially averaged target critics.
class SacAgent final : public Agent {
 public:
  SacAgent(int state_dim, int action_dim, SacConfig config, std::uint64_t seed);

  Eigen::VectorXd act(const Eigen::VectorXd& state, bool deterministic) override;

  // One gradient step on both critics, an actor step every
  // actor_update_period calls, and a target update every target_update_period.
  SacUpdateStats update(const ReplayBuffer::Batch& batch);

  // Soft Bellman residual with y = r + discount * not_terminal *
  // (min_k Qbar_k(s', a') - alpha log pi(a'|s')), a' from `next_noise`.
  CriticLoss critic_loss(const ReplayBuffer::Batch& batch, const Eigen::MatrixXd& next_noise) const;
  // mean(alpha log pi(a|s) - min_k Q_k(s, a)), a from `noise`.
  ActorLoss actor_loss(const ReplayBuffer::Batch& batch, const Eigen::MatrixXd& noise) const;

  // target <- (1 - tau) target + tau online
  void soft_update_targets();
  // Fresh critics and targets; the actor is kept.
  void reset_critics();

  const SacConfig& config() const { return config_; }
  void set_alpha(double alpha) { config_.alpha = alpha; }
  SquashedGaussianActor& actor() { return actor_; }
  const SquashedGaussianActor& actor() const { return actor_; }
  Mlp& critic(int k) { return critics_[k]; }
  const Mlp& critic(int k) const { return critics_[k]; }
  const Mlp& target_critic(int k) const { return targets_[k]; }
  Rng& rng() { return rng_; }

 private:
  Eigen::MatrixXd draw_noise(Eigen::Index cols);

  int state_dim_;
  int action_dim_;
  SacConfig config_;
  Rng rng_;
  SquashedGaussianActor actor_;
  std::array<Mlp, 2> critics_;
  std::array<Mlp, 2> targets_;
  Adam actor_opt_;
  std::array<Adam, 2> critic_opt_;
  long updates_ = 0;
};

Eigen::MatrixXd critic_inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

}  // namespace bpref
