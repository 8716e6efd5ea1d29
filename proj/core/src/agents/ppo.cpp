#include "bpref/agents/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace bpref {

namespace {

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

GaussianPolicy::GaussianPolicy(int state_dim, int action_dim, const std::vector<int>& hidden,
                               double init_log_std)
    : mean_net_(with_ends(state_dim, hidden, action_dim), Activation::kTanh, Activation::kIdentity),
      log_std_(Eigen::VectorXd::Constant(action_dim, init_log_std)) {}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
  const Eigen::MatrixXd mu = mean(states);
  const Eigen::ArrayXd inv_std = (-log_std_).array().exp();
  Eigen::VectorXd lp(states.cols());
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    const Eigen::ArrayXd z = (actions.col(c) - mu.col(c)).array() * inv_std;
    lp[c] = (-0.5 * z.square() - log_std_.array() - kHalfLog2Pi).sum();
  }
  return lp;
}

double GaussianPolicy::entropy() const {
  return (log_std_.array() + 0.5 + kHalfLog2Pi).sum();
}

Eigen::VectorXd compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                            const Eigen::VectorXd& next_values, const std::vector<bool>& done,
                            const std::vector<bool>& terminal, double discount, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || next_values.size() != n || static_cast<Eigen::Index>(done.size()) != n ||
      static_cast<Eigen::Index>(terminal.size()) != n) {
    throw std::invalid_argument("compute_gae: length mismatch");
  }
  Eigen::VectorXd adv(n);
  double next_adv = 0.0;
  for (Eigen::Index t = n; t-- > 0;) {
    const double bootstrap = terminal[t] ? 0.0 : discount * next_values[t];
    const double delta = rewards[t] + bootstrap - values[t];
    // The last stored step has no successor in the batch.
    const double carry = (done[t] || t + 1 == n) ? 0.0 : discount * lambda * next_adv;
    adv[t] = delta + carry;
    next_adv = adv[t];
  }
  return adv;
}

PpoLosses ppo_loss(const GaussianPolicy& policy, const Mlp& value, const PpoBatch& batch, double clip) {
  const Eigen::Index b = batch.states.cols();
  const Eigen::Index ad = batch.actions.rows();
  PpoLosses out;
  Mlp::Tape mean_tape;
  const Eigen::MatrixXd mu = policy.mean_net().forward(batch.states, mean_tape);
  const Eigen::ArrayXd inv_var = (-2.0 * policy.log_std()).array().exp();

  Eigen::MatrixXd g_mean(ad, b);
  out.log_std_gradient = Eigen::VectorXd::Zero(ad);
  long clipped = 0;
  for (Eigen::Index c = 0; c < b; ++c) {
    const Eigen::ArrayXd diff = (batch.actions.col(c) - mu.col(c)).array();
    const double lp = (-0.5 * diff.square() * inv_var - policy.log_std().array() - kHalfLog2Pi).sum();
    const double ratio = std::exp(lp - batch.old_log_prob[c]);
    const double a = batch.advantages[c];
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double unclipped_term = ratio * a;
    const double clipped_term = clipped_ratio * a;
    out.policy_loss -= std::min(unclipped_term, clipped_term);
    const bool active = unclipped_term <= clipped_term;
    if (clipped_ratio != ratio) ++clipped;
    // dL/dlogp for this sample (zero on the clipped branch).
    const double g_lp = active ? -a * ratio / static_cast<double>(b) : 0.0;
    g_mean.col(c) = (g_lp * diff * inv_var).matrix();
    out.log_std_gradient += (g_lp * (diff.square() * inv_var - 1.0)).matrix();
  }
  out.policy_loss /= static_cast<double>(b);
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(b);
  out.mean_gradient = zero_gradient(policy.mean_net());
  policy.mean_net().backward(mean_tape, g_mean, &out.mean_gradient);

  Mlp::Tape v_tape;
  const Eigen::RowVectorXd v_err = value.forward(batch.states, v_tape).row(0) - batch.returns.transpose();
  out.value_loss = v_err.squaredNorm() / static_cast<double>(b);
  out.value_gradient = zero_gradient(value);
  value.backward(v_tape, 2.0 * v_err / static_cast<double>(b), &out.value_gradient);
  return out;
}

double unclipped_surrogate(const GaussianPolicy& policy, const PpoBatch& batch) {
  const Eigen::VectorXd lp = policy.log_prob(batch.states, batch.actions);
  return -((lp - batch.old_log_prob).array().exp() * batch.advantages.array()).mean();
}

void RolloutStorage::clear() {
  states.clear();
  actions.clear();
  next_states.clear();
  log_probs.clear();
  rewards.clear();
  done.clear();
  terminal.clear();
}

PpoAgent::PpoAgent(int state_dim, int action_dim, PpoConfig config, std::uint64_t seed)
    : action_dim_(action_dim),
      config_(std::move(config)),
      rng_(derive_seed(seed, "ppo_sampling")),
      policy_(state_dim, action_dim, config_.hidden, config_.init_log_std),
      value_(with_ends(state_dim, config_.hidden, 1), Activation::kTanh, Activation::kIdentity) {
  Rng init(derive_seed(seed, "ppo_init"));
  policy_.mean_net().initialize(init);
  // Small output layer keeps the initial mean near zero.
  policy_.mean_net().layers().back().weight *= 0.01;
  value_.initialize(init);
  const AdamConfig adam{config_.learning_rate};
  mean_opt_ = Adam(policy_.mean_net(), adam);
  log_std_opt_ = VectorAdam(action_dim, adam);
  value_opt_ = Adam(value_, adam);
}

Eigen::VectorXd PpoAgent::act(const Eigen::VectorXd& state, bool deterministic) {
  if (deterministic) return policy_.mean(state).col(0).cwiseMax(-1.0).cwiseMin(1.0);
  double lp = 0.0;
  return sample(state, lp);
}

Eigen::VectorXd PpoAgent::sample(const Eigen::VectorXd& state, double& log_prob) {
  const Eigen::VectorXd mu = policy_.mean(state).col(0);
  Eigen::VectorXd a(action_dim_);
  for (int i = 0; i < action_dim_; ++i) a[i] = mu[i] + std::exp(policy_.log_std()[i]) * rng_.normal();
  log_prob = policy_.log_prob(state, a)[0];
  return a;
}

PpoBatch PpoAgent::make_batch(const RolloutStorage& st) const {
  const auto n = static_cast<Eigen::Index>(st.size());
  if (n == 0) throw std::invalid_argument("PPO: empty rollout");
  PpoBatch b;
  b.states.resize(st.states.front().size(), n);
  b.actions.resize(action_dim_, n);
  Eigen::MatrixXd next(st.states.front().size(), n);
  b.old_log_prob.resize(n);
  Eigen::VectorXd rewards(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.states.col(i) = st.states[i];
    b.actions.col(i) = st.actions[i];
    next.col(i) = st.next_states[i];
    b.old_log_prob[i] = st.log_probs[i];
    rewards[i] = st.rewards[i];
  }
  const Eigen::VectorXd values = value_.forward(b.states).row(0).transpose();
  const Eigen::VectorXd next_values = value_.forward(next).row(0).transpose();
  b.advantages = compute_gae(rewards, values, next_values, st.done, st.terminal, config_.discount,
                             config_.gae_lambda);
  b.returns = b.advantages + values;
  if (config_.normalize_advantages && n > 1) {
    const double mean = b.advantages.mean();
    const double sd = std::sqrt((b.advantages.array() - mean).square().mean());
    b.advantages = (b.advantages.array() - mean) / (sd + 1e-8);
  }
  return b;
}

PpoUpdateStats PpoAgent::update(const RolloutStorage& storage) {
  const PpoBatch full = make_batch(storage);
  const Eigen::Index n = full.states.cols();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  PpoUpdateStats stats;
  long batches = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_.engine());
    for (Eigen::Index start = 0; start < n; start += config_.minibatch_size) {
      const Eigen::Index m = std::min<Eigen::Index>(config_.minibatch_size, n - start);
      PpoBatch mb;
      mb.states.resize(full.states.rows(), m);
      mb.actions.resize(full.actions.rows(), m);
      mb.old_log_prob.resize(m);
      mb.advantages.resize(m);
      mb.returns.resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index i = order[start + k];
        mb.states.col(k) = full.states.col(i);
        mb.actions.col(k) = full.actions.col(i);
        mb.old_log_prob[k] = full.old_log_prob[i];
        mb.advantages[k] = full.advantages[i];
        mb.returns[k] = full.returns[i];
      }
      const PpoLosses l = ppo_loss(policy_, value_, mb, config_.clip);
      mean_opt_.step(policy_.mean_net(), l.mean_gradient);
      log_std_opt_.step(policy_.log_std(), l.log_std_gradient);
      value_opt_.step(value_, l.value_gradient);
      stats.policy_loss += l.policy_loss;
      stats.value_loss += l.value_loss;
      stats.clip_fraction += l.clip_fraction;
      ++batches;
    }
  }
  if (batches > 0) {
    stats.policy_loss /= batches;
    stats.value_loss /= batches;
    stats.clip_fraction /= batches;
  }
  return stats;
}

}  // namespace bpref
