#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bpref/envsim.hpp"
#include "bpref/nn.hpp"
#include "bpref/random.hpp"
#include "bpref/teacher.hpp"

namespace bpref {

struct RewardModelConfig {
  int ensemble_size = 3;
  std::vector<int> hidden = {64, 64};
  double learning_rate = 3e-4;
  int batch_size = 128;
  int epochs = 50;
  // Stop a member's session early once its train accuracy reaches this (<= 0 disables).
  double target_accuracy = 0.97;
  bool label_smoothing = false;
  std::uint64_t seed = 0;
};

// Holds the non-skipped preference dataset D.
class AnnotationStore {
 public:
  // 0 means unbounded; otherwise the oldest record is evicted first.
  explicit AnnotationStore(std::size_t capacity = 0) : capacity_(capacity) {}

  // Returns false (and stores nothing) for skipped labels.
  bool add(PreferenceRecord record);

  std::span<const PreferenceRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  void clear() { records_.clear(); }

 private:
  std::size_t capacity_;
  std::vector<PreferenceRecord> records_;
};

// (s, a) stacked into one input column.
Eigen::MatrixXd reward_inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

// Applies the soft-label transform 0.9 * y + 0.05.
std::array<double, 2> smooth_label(std::array<double, 2> y);

struct PreferenceLoss {
  double loss = 0.0;       // mean cross-entropy over the minibatch
  double accuracy = 0.0;   // fraction of hard labels predicted correctly
  MlpGradient gradient;    // d(loss)/d(params)
};

// Cross-entropy of the logistic preference predictor against the records'
// labels, with analytic gradients backpropagated through both segment sums.
PreferenceLoss preference_loss(const Mlp& net, std::span<const PreferenceRecord> batch, bool smoothing);
PreferenceLoss preference_loss(const Mlp& net, std::span<const PreferenceRecord* const> batch,
                               bool smoothing);

Mlp make_reward_network(int state_dim, int action_dim, const std::vector<int>& hidden);

struct MemberTrainStats {
  double final_loss = 0.0;
  double accuracy = 0.0;
  int epochs_run = 0;
};

struct TrainStats {
  std::vector<MemberTrainStats> members;
  double mean_loss() const;
  double mean_accuracy() const;
};

class RewardEnsemble {
 public:
  RewardEnsemble(int state_dim, int action_dim, RewardModelConfig config);

  std::size_t size() const { return members_.size(); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const RewardModelConfig& config() const { return config_; }
  const Mlp& member(std::size_t i) const { return members_.at(i); }
  Mlp& member(std::size_t i) { return members_.at(i); }

  double predict_reward(std::size_t member, const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;
  double predict_reward(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;  // ensemble mean

  // Per-column rewards for (state_dim + action_dim) x N inputs.
  Eigen::VectorXd predict_rewards(std::size_t member, const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd predict_rewards(const Eigen::MatrixXd& inputs) const;  // ensemble mean

  // P[seg1 > seg0] under one member.
  double predict_preference(std::size_t member, const Segment& seg0, const Segment& seg1) const;
  // Population variance of the member preference probabilities.
  double disagreement(const Segment& seg0, const Segment& seg1) const;
  // Binary entropy of one member's preference probability.
  double predictor_entropy(const Segment& seg0, const Segment& seg1, std::size_t member = 0) const;

  PreferenceLoss loss_and_gradient(std::size_t member, std::span<const PreferenceRecord> batch) const;

  // Trains every member on its own shuffle of the store.
  TrainStats train(const AnnotationStore& store, int epochs, int batch_size);
  TrainStats train(const AnnotationStore& store) { return train(store, config_.epochs, config_.batch_size); }

  // Re-draws every member's parameters and optimizer state (cold start).
  void reinitialize();

  nlohmann::json to_json() const;

 private:
  int state_dim_;
  int action_dim_;
  RewardModelConfig config_;
  std::vector<Mlp> members_;
  std::vector<Adam> optimizers_;
  std::vector<Rng> rngs_;
  int generation_ = 0;
};

// Stand-alone variants used by the sampler.
double ensemble_disagreement(std::span<const double> member_probabilities);

}  // namespace bpref
