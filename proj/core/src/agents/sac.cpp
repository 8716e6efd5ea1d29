#include "bpref/agents/sac.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bpref/numeric.hpp"

namespace bpref {

Eigen::MatrixXd critic_inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd in(states.rows() + actions.rows(), states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

namespace {

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

SquashedGaussianActor::SquashedGaussianActor(int state_dim, int action_dim, const std::vector<int>& hidden,
                                             double log_std_min, double log_std_max)
    : action_dim_(action_dim),
      log_std_min_(log_std_min),
      log_std_max_(log_std_max),
      net_(with_ends(state_dim, hidden, 2 * action_dim), Activation::kRelu, Activation::kIdentity) {}

SquashedGaussianActor::Sample SquashedGaussianActor::sample(const Eigen::MatrixXd& states,
                                                            const Eigen::MatrixXd& noise) const {
  Sample s;
  const Eigen::MatrixXd& out = net_.forward(states, s.tape);
  const Eigen::Index b = states.cols();
  s.raw_log_std = out.bottomRows(action_dim_);
  const Eigen::ArrayXXd log_std =
      log_std_min_ + 0.5 * (log_std_max_ - log_std_min_) * (s.raw_log_std.array().tanh() + 1.0);
  s.std = log_std.exp().matrix();
  s.noise = noise;
  const Eigen::ArrayXXd u = out.topRows(action_dim_).array() + s.std.array() * noise.array();
  s.actions = u.tanh().matrix();
  s.log_prob.resize(b);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index c = 0; c < b; ++c) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < action_dim_; ++i) {
      const double x = u(i, c);
      const double log_one_minus_tanh2 = 2.0 * (std::numbers::ln2 - x - softplus(-2.0 * x));
      lp += -0.5 * noise(i, c) * noise(i, c) - log_std(i, c) - half_log_2pi - log_one_minus_tanh2;
    }
    s.log_prob[c] = lp;
  }
  return s;
}

Eigen::MatrixXd SquashedGaussianActor::mean_action(const Eigen::MatrixXd& states) const {
  return net_.forward(states).topRows(action_dim_).array().tanh().matrix();
}

void SquashedGaussianActor::backward(const Sample& s, const Eigen::MatrixXd& grad_actions,
                                     const Eigen::VectorXd& grad_log_prob, MlpGradient& grad) const {
  const Eigen::ArrayXXd a = s.actions.array();
  const Eigen::ArrayXXd gl = grad_log_prob.transpose().replicate(action_dim_, 1).array();
  // d log_prob / du = 2 tanh(u) through the squashing correction.
  const Eigen::ArrayXXd gu = grad_actions.array() * (1.0 - a.square()) + 2.0 * a * gl;
  const Eigen::ArrayXXd g_log_std = gu * s.std.array() * s.noise.array() - gl;
  const Eigen::ArrayXXd t = s.raw_log_std.array().tanh();
  Eigen::MatrixXd grad_out(2 * action_dim_, s.actions.cols());
  grad_out.topRows(action_dim_) = gu.matrix();
  grad_out.bottomRows(action_dim_) = (g_log_std * 0.5 * (log_std_max_ - log_std_min_) * (1.0 - t.square())).matrix();
  net_.backward(s.tape, grad_out, &grad);
}

SacAgent::SacAgent(int state_dim, int action_dim, SacConfig config, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      config_(std::move(config)),
      rng_(derive_seed(seed, "sac_sampling")),
      actor_(state_dim, action_dim, config_.hidden, config_.log_std_min, config_.log_std_max) {
  if (config_.alpha <= 0.0) throw std::invalid_argument("SAC temperature must be positive");
  Rng init(derive_seed(seed, "sac_init"));
  actor_.net().initialize(init);
  actor_opt_ = Adam(actor_.net(), AdamConfig{config_.actor_lr});
  reset_critics();
}

void SacAgent::reset_critics() {
  Rng init(derive_seed(rng_.engine()(), "sac_critic_init"));
  for (int k = 0; k < 2; ++k) {
    critics_[k] = Mlp(with_ends(state_dim_ + action_dim_, config_.hidden, 1), Activation::kRelu,
                      Activation::kIdentity);
    critics_[k].initialize(init);
    targets_[k] = critics_[k];
    critic_opt_[k] = Adam(critics_[k], AdamConfig{config_.critic_lr});
  }
}

Eigen::MatrixXd SacAgent::draw_noise(Eigen::Index cols) {
  Eigen::MatrixXd n(action_dim_, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index i = 0; i < action_dim_; ++i) n(i, c) = rng_.normal();
  }
  return n;
}

Eigen::VectorXd SacAgent::act(const Eigen::VectorXd& state, bool deterministic) {
  if (deterministic) return actor_.mean_action(state).col(0);
  return actor_.sample(state, draw_noise(1)).actions.col(0);
}

CriticLoss SacAgent::critic_loss(const ReplayBuffer::Batch& batch, const Eigen::MatrixXd& next_noise) const {
  const Eigen::Index b = batch.states.cols();
  const auto next = actor_.sample(batch.next_states, next_noise);
  const Eigen::MatrixXd next_in = critic_inputs(batch.next_states, next.actions);
  const Eigen::VectorXd q_next =
      targets_[0].forward(next_in).cwiseMin(targets_[1].forward(next_in)).row(0).transpose();
  CriticLoss out;
  out.targets = batch.rewards.array() +
                config_.discount * batch.not_terminal.array() * (q_next - config_.alpha * next.log_prob).array();
  const Eigen::MatrixXd in = critic_inputs(batch.states, batch.actions);
  for (int k = 0; k < 2; ++k) {
    Mlp::Tape tape;
    const Eigen::RowVectorXd diff = critics_[k].forward(in, tape).row(0) - out.targets.transpose();
    out.loss += diff.squaredNorm() / static_cast<double>(b);
    out.gradients[k] = zero_gradient(critics_[k]);
    critics_[k].backward(tape, 2.0 * diff / static_cast<double>(b), &out.gradients[k]);
  }
  return out;
}

ActorLoss SacAgent::actor_loss(const ReplayBuffer::Batch& batch, const Eigen::MatrixXd& noise) const {
  const Eigen::Index b = batch.states.cols();
  const auto s = actor_.sample(batch.states, noise);
  const Eigen::MatrixXd in = critic_inputs(batch.states, s.actions);
  std::array<Mlp::Tape, 2> tapes;
  const Eigen::RowVectorXd q0 = critics_[0].forward(in, tapes[0]).row(0);
  const Eigen::RowVectorXd q1 = critics_[1].forward(in, tapes[1]).row(0);
  Eigen::RowVectorXd g0 = Eigen::RowVectorXd::Zero(b);
  Eigen::RowVectorXd g1 = Eigen::RowVectorXd::Zero(b);
  ActorLoss out;
  for (Eigen::Index c = 0; c < b; ++c) {
    const bool first = q0[c] <= q1[c];
    out.loss += config_.alpha * s.log_prob[c] - (first ? q0[c] : q1[c]);
    (first ? g0 : g1)[c] = -1.0 / static_cast<double>(b);
  }
  out.loss /= static_cast<double>(b);
  out.entropy = -s.log_prob.mean();
  const Eigen::MatrixXd g_in = critics_[0].backward(tapes[0], g0, nullptr) + critics_[1].backward(tapes[1], g1, nullptr);
  out.gradient = zero_gradient(actor_.net());
  actor_.backward(s, g_in.bottomRows(action_dim_),
                  Eigen::VectorXd::Constant(b, config_.alpha / static_cast<double>(b)), out.gradient);
  return out;
}

void SacAgent::soft_update_targets() {
  for (int k = 0; k < 2; ++k) targets_[k].soft_update_from(critics_[k], config_.tau);
}

SacUpdateStats SacAgent::update(const ReplayBuffer::Batch& batch) {
  SacUpdateStats stats;
  const Eigen::Index b = batch.states.cols();
  CriticLoss cl = critic_loss(batch, draw_noise(b));
  stats.critic_loss = cl.loss;
  for (int k = 0; k < 2; ++k) critic_opt_[k].step(critics_[k], cl.gradients[k]);
  if (updates_ % config_.actor_update_period == 0) {
    ActorLoss al = actor_loss(batch, draw_noise(b));
    actor_opt_.step(actor_.net(), al.gradient);
    stats.actor_loss = al.loss;
    stats.actor_updated = true;
  }
  if (updates_ % config_.target_update_period == 0) soft_update_targets();
  ++updates_;
  return stats;
}

}  // namespace bpref
