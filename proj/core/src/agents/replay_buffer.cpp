#include "bpref/agents/replay_buffer.hpp"

#include <stdexcept>

namespace bpref {

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::size_t capacity)
    : capacity_(capacity),
      states_(state_dim, static_cast<Eigen::Index>(capacity)),
      actions_(action_dim, static_cast<Eigen::Index>(capacity)),
      next_states_(state_dim, static_cast<Eigen::Index>(capacity)),
      reward_true_(static_cast<Eigen::Index>(capacity)),
      reward_learned_(static_cast<Eigen::Index>(capacity)),
      not_terminal_(static_cast<Eigen::Index>(capacity)) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::add(const Transition& tr, double reward_learned) {
  const auto i = static_cast<Eigen::Index>(write_);
  states_.col(i) = tr.state;
  actions_.col(i) = tr.action;
  next_states_.col(i) = tr.next_state;
  reward_true_[i] = tr.reward_true;
  reward_learned_[i] = reward_learned;
  not_terminal_[i] = tr.terminal ? 0.0 : 1.0;
  write_ = (write_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

void ReplayBuffer::clear() {
  size_ = 0;
  write_ = 0;
}

ReplayBuffer::Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots, RewardSource source) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  Batch b{Eigen::MatrixXd(states_.rows(), n), Eigen::MatrixXd(actions_.rows(), n),
          Eigen::MatrixXd(states_.rows(), n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(slots[k]);
    b.states.col(k) = states_.col(i);
    b.actions.col(k) = actions_.col(i);
    b.next_states.col(k) = next_states_.col(i);
    b.rewards[k] = source == RewardSource::kLearned ? reward_learned_[i] : reward_true_[i];
    b.not_terminal[k] = not_terminal_[i];
  }
  return b;
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t n, Rng& rng, RewardSource source) const {
  if (size_ == 0) throw std::logic_error("cannot sample from an empty replay buffer");
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = rng.index(size_);
  return gather(slots, source);
}

std::size_t ReplayBuffer::relabel(const RewardEnsemble& ensemble, int member) {
  // Column-at-a-time so stored values match predict_reward bit for bit.
  for (std::size_t i = 0; i < size_; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd s = states_.col(c);
    const Eigen::VectorXd a = actions_.col(c);
    reward_learned_[c] = member < 0 ? ensemble.predict_reward(s, a)
                                    : ensemble.predict_reward(static_cast<std::size_t>(member), s, a);
  }
  return size_;
}

}  // namespace bpref
