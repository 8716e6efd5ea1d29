#pragma once

#include <Eigen/Dense>

#include <cstddef>

#include "bpref/envsim.hpp"
#include "bpref/random.hpp"
#include "bpref/reward_model.hpp"

namespace bpref {

enum class RewardSource { kLearned, kTrue };

// Fixed-capacity ring of transitions, each carrying its ground-truth reward
// and the learned reward from the most recent relabel pass.
class ReplayBuffer {
 public:
  struct Batch {
    Eigen::MatrixXd states;       // state_dim x B
    Eigen::MatrixXd actions;      // action_dim x B
    Eigen::MatrixXd next_states;  // state_dim x B
    Eigen::VectorXd rewards;      // B
    Eigen::VectorXd not_terminal; // B, 0 where bootstrapping stops
  };

  ReplayBuffer(int state_dim, int action_dim, std::size_t capacity);

  void add(const Transition& tr, double reward_learned);
  void clear();

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

  Batch sample(std::size_t n, Rng& rng, RewardSource source = RewardSource::kLearned) const;
  // Batch from explicit storage slots, each < size().
  Batch gather(const std::vector<std::size_t>& slots, RewardSource source) const;

  // Recomputes every stored learned reward with the ensemble (mean over
  // members, or one member when `member` is >= 0). Returns size().
  std::size_t relabel(const RewardEnsemble& ensemble, int member = -1);

  auto state(std::size_t i) const { return states_.col(static_cast<Eigen::Index>(i)); }
  auto action(std::size_t i) const { return actions_.col(static_cast<Eigen::Index>(i)); }
  double reward_learned(std::size_t i) const { return reward_learned_[static_cast<Eigen::Index>(i)]; }
  double reward_true(std::size_t i) const { return reward_true_[static_cast<Eigen::Index>(i)]; }
  // Stored next states, state_dim x size().
  Eigen::MatrixXd next_states() const { return next_states_.leftCols(static_cast<Eigen::Index>(size_)); }

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t write_ = 0;
  Eigen::MatrixXd states_;
  Eigen::MatrixXd actions_;
  Eigen::MatrixXd next_states_;
  Eigen::VectorXd reward_true_;
  Eigen::VectorXd reward_learned_;
  Eigen::VectorXd not_terminal_;
};

}  // namespace bpref
