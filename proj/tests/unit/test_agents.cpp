#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bpref/agents/exploration.hpp"
#include "bpref/agents/ppo.hpp"
#include "bpref/agents/replay_buffer.hpp"
#include "bpref/agents/sac.hpp"
#include "bpref/agents/trainer.hpp"
#include "bpref/random.hpp"

using namespace bpref;

namespace {

void jitter(Mlp& net, Rng& rng, double scale = 0.1) {
  Eigen::VectorXd p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += scale * rng.normal();
  net.set_parameters(p);
}

ReplayBuffer::Batch random_batch(Rng& rng, int sd, int ad, int b) {
  ReplayBuffer::Batch batch;
  batch.states = Eigen::MatrixXd::NullaryExpr(sd, b, [&] { return rng.uniform(-1, 1); });
  batch.actions = Eigen::MatrixXd::NullaryExpr(ad, b, [&] { return rng.uniform(-0.9, 0.9); });
  batch.next_states = Eigen::MatrixXd::NullaryExpr(sd, b, [&] { return rng.uniform(-1, 1); });
  batch.rewards = Eigen::VectorXd::NullaryExpr(b, [&] { return rng.uniform(0, 1); });
  batch.not_terminal = Eigen::VectorXd::Ones(b);
  batch.not_terminal[0] = 0.0;
  return batch;
}

Eigen::MatrixXd normal_matrix(Rng& rng, int r, int c) {
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return rng.normal(); });
}

// Central-difference gradient of f over the parameters of `net`.
template <typename F>
Eigen::VectorXd numeric_gradient(Mlp& net, F f, double h = 1e-6) {
  const Eigen::VectorXd p = net.parameters();
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd q = p;
    q[i] += h;
    net.set_parameters(q);
    const double up = f();
    q[i] -= 2 * h;
    net.set_parameters(q);
    const double down = f();
    g[i] = (up - down) / (2 * h);
  }
  net.set_parameters(p);
  return g;
}

void check_close(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double rel = 1e-4) {
  REQUIRE(analytic.size() == numeric.size());
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    CHECK(std::abs(analytic[i] - numeric[i]) <= rel * std::max(1e-3, std::abs(numeric[i])));
  }
}

Transition transition(Rng& rng, int sd, int ad) {
  Transition t;
  t.state = Eigen::VectorXd::NullaryExpr(sd, [&] { return rng.uniform(-1, 1); });
  t.action = Eigen::VectorXd::NullaryExpr(ad, [&] { return rng.uniform(-1, 1); });
  t.next_state = Eigen::VectorXd::NullaryExpr(sd, [&] { return rng.uniform(-1, 1); });
  t.reward_true = rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("replay buffer storage, wraparound and relabel") {
  Rng rng(1);
  ReplayBuffer buf(3, 2, 5);
  std::vector<Transition> all;
  for (int i = 0; i < 8; ++i) {
    all.push_back(transition(rng, 3, 2));
    buf.add(all.back(), 0.0);
  }
  CHECK(buf.size() == 5);
  // The oldest three were overwritten; every stored state is one of the last five.
  for (std::size_t i = 0; i < buf.size(); ++i) {
    bool found = false;
    for (int j = 3; j < 8; ++j) found = found || (buf.state(i) - all[j].state).norm() == 0.0;
    CHECK(found);
  }
  RewardModelConfig rc;
  rc.hidden = {8};
  RewardEnsemble ens(3, 2, rc);
  CHECK(buf.relabel(ens) == 5);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    CHECK(buf.reward_learned(i) == ens.predict_reward(buf.state(i), buf.action(i)));
  }
  buf.relabel(ens, 1);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    CHECK(buf.reward_learned(i) == ens.predict_reward(1, buf.state(i), buf.action(i)));
  }
  const auto learned = buf.gather({0, 4}, RewardSource::kLearned);
  const auto truth = buf.gather({0, 4}, RewardSource::kTrue);
  CHECK(learned.rewards[1] == buf.reward_learned(4));
  CHECK(truth.rewards[1] == buf.reward_true(4));
  CHECK(buf.sample(7, rng).states.cols() == 7);
  buf.clear();
  CHECK(buf.empty());
  CHECK_THROWS(buf.sample(1, rng));
}

TEST_CASE("squashed gaussian log-probability") {
  Rng rng(2);
  SquashedGaussianActor actor(3, 2, {8, 8}, -5.0, 2.0);
  jitter(actor.net(), rng, 0.5);
  const Eigen::MatrixXd s = normal_matrix(rng, 3, 10);
  const Eigen::MatrixXd eps = normal_matrix(rng, 2, 10);
  const auto smp = actor.sample(s, eps);
  const Eigen::MatrixXd out = actor.net().forward(s);
  for (int c = 0; c < 10; ++c) {
    double lp = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double ls = -5.0 + 3.5 * (std::tanh(out(2 + i, c)) + 1.0);
      const double sd = std::exp(ls);
      const double u = out(i, c) + sd * eps(i, c);
      lp += -0.5 * eps(i, c) * eps(i, c) - ls - 0.5 * std::log(2 * std::numbers::pi) -
            std::log(1.0 - std::tanh(u) * std::tanh(u));
      CHECK(smp.actions(i, c) == doctest::Approx(std::tanh(u)).epsilon(1e-12));
      CHECK(ls >= -5.0);
      CHECK(ls <= 2.0);
    }
    CHECK(smp.log_prob[c] == doctest::Approx(lp).epsilon(1e-8));
  }
}

TEST_CASE("SAC critic loss and gradient") {
  Rng rng(3);
  SacConfig cfg;
  cfg.hidden = {10, 10};
  SacAgent agent(3, 2, cfg, 7);
  for (int k = 0; k < 2; ++k) jitter(agent.critic(k), rng);
  jitter(agent.actor().net(), rng);
  const auto batch = random_batch(rng, 3, 2, 16);
  const Eigen::MatrixXd next_noise = normal_matrix(rng, 2, 16);
  const CriticLoss cl = agent.critic_loss(batch, next_noise);

  // Targets from the target critics and the actor's next-state sample.
  const auto next = agent.actor().sample(batch.next_states, next_noise);
  const Eigen::MatrixXd next_in = critic_inputs(batch.next_states, next.actions);
  for (int c = 0; c < 16; ++c) {
    const double qmin = std::min(agent.target_critic(0).forward(next_in.col(c))(0, 0),
                                 agent.target_critic(1).forward(next_in.col(c))(0, 0));
    const double y = batch.rewards[c] + cfg.discount * batch.not_terminal[c] * (qmin - cfg.alpha * next.log_prob[c]);
    CHECK(cl.targets[c] == doctest::Approx(y).epsilon(1e-12));
  }
  CHECK(cl.targets[0] == batch.rewards[0]);

  auto direct = [&] {
    const Eigen::MatrixXd in = critic_inputs(batch.states, batch.actions);
    double loss = 0.0;
    for (int k = 0; k < 2; ++k) loss += (agent.critic(k).forward(in).row(0) - cl.targets.transpose()).squaredNorm() / 16.0;
    return loss;
  };
  CHECK(cl.loss == doctest::Approx(direct()).epsilon(1e-12));
  for (int k = 0; k < 2; ++k) check_close(flatten(cl.gradients[k]), numeric_gradient(agent.critic(k), direct));
}

TEST_CASE("SAC actor loss gradient") {
  Rng rng(4);
  SacConfig cfg;
  cfg.hidden = {10, 10};
  SacAgent agent(3, 2, cfg, 8);
  for (int k = 0; k < 2; ++k) jitter(agent.critic(k), rng, 0.3);
  jitter(agent.actor().net(), rng, 0.3);
  const auto batch = random_batch(rng, 3, 2, 12);
  const Eigen::MatrixXd noise = normal_matrix(rng, 2, 12);
  const ActorLoss al = agent.actor_loss(batch, noise);
  auto direct = [&] {
    const auto s = agent.actor().sample(batch.states, noise);
    const Eigen::MatrixXd in = critic_inputs(batch.states, s.actions);
    const Eigen::RowVectorXd q = agent.critic(0).forward(in).row(0).cwiseMin(agent.critic(1).forward(in).row(0));
    return (cfg.alpha * s.log_prob.transpose() - q).mean();
  };
  CHECK(al.loss == doctest::Approx(direct()).epsilon(1e-12));
  check_close(flatten(al.gradient), numeric_gradient(agent.actor().net(), direct));
}

TEST_CASE("SAC target averaging, critic reset and learning") {
  Rng rng(5);
  SacConfig cfg;
  cfg.hidden = {16, 16};
  SacAgent agent(2, 1, cfg, 9);
  jitter(agent.critic(0), rng);
  const Eigen::VectorXd online = agent.critic(0).parameters();
  const Eigen::VectorXd target = agent.target_critic(0).parameters();
  agent.soft_update_targets();
  CHECK((agent.target_critic(0).parameters() - ((1 - cfg.tau) * target + cfg.tau * online)).norm() < 1e-12);

  const Eigen::VectorXd actor_before = agent.actor().net().parameters();
  agent.reset_critics();
  CHECK(agent.critic(0).parameters() != online);
  CHECK((agent.target_critic(0).parameters() - agent.critic(0).parameters()).norm() == 0.0);
  CHECK(agent.actor().net().parameters() == actor_before);

  // Reward = a on a one-step problem: the mean action should move up.
  ReplayBuffer buf(2, 1, 4000);
  for (int i = 0; i < 4000; ++i) {
    Transition t = transition(rng, 2, 1);
    t.reward_true = t.action[0];
    t.terminal = true;
    buf.add(t, 0.0);
  }
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(2);
  const double before = agent.act(probe, true)[0];
  for (int i = 0; i < 1500; ++i) agent.update(buf.sample(64, rng, RewardSource::kTrue));
  CHECK(agent.act(probe, true)[0] > std::max(before, 0.5));
}

TEST_CASE("GAE against the direct sum") {
  Rng rng(6);
  const int n = 40;
  Eigen::VectorXd r(n);
  Eigen::VectorXd v(n);
  Eigen::VectorXd nv(n);
  std::vector<bool> done(n, false);
  std::vector<bool> terminal(n, false);
  for (int i = 0; i < n; ++i) {
    r[i] = rng.normal();
    v[i] = rng.normal();
    nv[i] = rng.normal();
  }
  done[9] = true;            // time limit: bootstrap, but cut the trace
  done[24] = terminal[24] = true;  // absorbing
  const double g = 0.97;
  const double lam = 0.9;
  const Eigen::VectorXd adv = compute_gae(r, v, nv, done, terminal, g, lam);
  for (int t = 0; t < n; ++t) {
    double a = 0.0;
    double w = 1.0;
    for (int l = t; l < n; ++l) {
      const double delta = r[l] + g * (terminal[l] ? 0.0 : nv[l]) - v[l];
      a += w * delta;
      if (done[l]) break;
      w *= g * lam;
    }
    CHECK(adv[t] == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("PPO loss gradients") {
  Rng rng(7);
  GaussianPolicy policy(3, 2, {8, 8}, -0.5);
  Rng init(1);
  policy.mean_net().initialize(init);
  jitter(policy.mean_net(), rng);
  Mlp value({3, 8, 1}, Activation::kTanh, Activation::kIdentity);
  value.initialize(init);
  PpoBatch batch;
  const int b = 20;
  batch.states = normal_matrix(rng, 3, b);
  batch.actions = policy.mean(batch.states) + 0.6 * normal_matrix(rng, 2, b);
  // Old policy slightly different so some ratios clip.
  batch.old_log_prob = policy.log_prob(batch.states, batch.actions) + 0.3 * normal_matrix(rng, b, 1);
  batch.advantages = normal_matrix(rng, b, 1);
  batch.returns = normal_matrix(rng, b, 1);
  const double clip = 0.2;
  const PpoLosses pl = ppo_loss(policy, value, batch, clip);
  CHECK(pl.clip_fraction > 0.0);

  auto policy_loss = [&] {
    const Eigen::VectorXd lp = policy.log_prob(batch.states, batch.actions);
    double loss = 0.0;
    for (int c = 0; c < b; ++c) {
      const double ratio = std::exp(lp[c] - batch.old_log_prob[c]);
      const double a = batch.advantages[c];
      loss -= std::min(ratio * a, std::clamp(ratio, 1 - clip, 1 + clip) * a);
    }
    return loss / b;
  };
  auto value_loss = [&] { return (value.forward(batch.states).row(0) - batch.returns.transpose()).squaredNorm() / b; };
  CHECK(pl.policy_loss == doctest::Approx(policy_loss()).epsilon(1e-12));
  CHECK(pl.value_loss == doctest::Approx(value_loss()).epsilon(1e-12));
  check_close(flatten(pl.mean_gradient), numeric_gradient(policy.mean_net(), policy_loss));
  check_close(flatten(pl.value_gradient), numeric_gradient(value, value_loss));
  Eigen::VectorXd ls_numeric(2);
  for (int i = 0; i < 2; ++i) {
    const double h = 1e-6;
    policy.log_std()[i] += h;
    const double up = policy_loss();
    policy.log_std()[i] -= 2 * h;
    const double down = policy_loss();
    policy.log_std()[i] += h;
    ls_numeric[i] = (up - down) / (2 * h);
  }
  check_close(pl.log_std_gradient, ls_numeric);

  // At the old policy the ratio is 1 and clipping is inactive.
  batch.old_log_prob = policy.log_prob(batch.states, batch.actions);
  const PpoLosses same = ppo_loss(policy, value, batch, clip);
  CHECK(same.clip_fraction == 0.0);
  CHECK(same.policy_loss == doctest::Approx(unclipped_surrogate(policy, batch)).epsilon(1e-12));
}

TEST_CASE("PPO learns a one-step bandit") {
  PpoConfig cfg;
  cfg.hidden = {16};
  cfg.rollout_steps = 256;
  PpoAgent agent(1, 1, cfg, 3);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(1);
  const double before = agent.act(s, true)[0];
  for (int it = 0; it < 30; ++it) {
    RolloutStorage st;
    for (int i = 0; i < cfg.rollout_steps; ++i) {
      double lp = 0.0;
      const Eigen::VectorXd a = agent.sample(s, lp);
      st.states.push_back(s);
      st.actions.push_back(a);
      st.next_states.push_back(s);
      st.log_probs.push_back(lp);
      st.rewards.push_back(-std::abs(std::clamp(a[0], -1.0, 1.0) - 0.6));
      st.done.push_back(true);
      st.terminal.push_back(true);
    }
    agent.update(st);
  }
  CHECK(std::abs(agent.act(s, true)[0] - 0.6) < std::abs(before - 0.6));
  CHECK(std::abs(agent.act(s, true)[0] - 0.6) < 0.15);
}

TEST_CASE("k-NN intrinsic reward matches exhaustive search") {
  Rng rng(8);
  const Eigen::MatrixXd set = Eigen::MatrixXd::NullaryExpr(3, 200, [&] { return rng.uniform(-1, 1); });
  for (int q = 0; q < 1000; ++q) {
    const int k = 1 + static_cast<int>(rng.index(10));
    Eigen::VectorXd query;
    bool member = q % 4 == 0;
    if (member) {
      query = set.col(static_cast<Eigen::Index>(rng.index(200)));
    } else {
      query = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.uniform(-1, 1); });
    }
    std::vector<double> d;
    bool skipped = false;
    for (Eigen::Index j = 0; j < set.cols(); ++j) {
      const double dist = (set.col(j) - query).norm();
      if (dist == 0.0 && !skipped) {
        skipped = true;
        continue;
      }
      d.push_back(dist);
    }
    std::sort(d.begin(), d.end());
    CHECK(intrinsic_reward(query, set, k) == doctest::Approx(std::log(std::max(d[k - 1], 1e-8))).epsilon(1e-14));
  }
  // Duplicates beyond the query itself count as neighbours at distance zero.
  Eigen::MatrixXd dup(1, 3);
  dup << 0.0, 0.0, 1.0;
  CHECK(intrinsic_reward(Eigen::VectorXd::Zero(1), dup, 1) == doctest::Approx(std::log(1e-8)));
  CHECK(intrinsic_reward(Eigen::VectorXd::Zero(1), dup, 2) == doctest::Approx(0.0));
  CHECK_THROWS(intrinsic_reward(Eigen::VectorXd::Zero(1), dup, 3));
  const Eigen::VectorXd batch = intrinsic_rewards(set.leftCols(5), set, 3);
  for (int i = 0; i < 5; ++i) CHECK(batch[i] == intrinsic_reward(set.col(i), set, 3));
}

TEST_CASE("state spread") {
  Eigen::MatrixXd pts(2, 4);
  pts << 1, -1, 1, -1, 2, 2, -2, -2;
  CHECK(state_spread(pts) == doctest::Approx(1.0 * 4 / 3 + 4.0 * 4 / 3));
}

TEST_CASE("exploration pretraining spreads states at least as much as a random policy") {
  const auto env = make_env("point_mass");
  SacConfig cfg;
  SacAgent agent(4, 2, cfg, 1);
  ReplayBuffer buf(4, 2, 10000);
  ExplorationConfig ec;
  const PretrainResult pr = pretrain(agent, *env, buf, ec, 5);
  CHECK(pr.steps == ec.pretrain_steps);
  CHECK(buf.size() == static_cast<std::size_t>(ec.pretrain_steps));
  CHECK(pr.trajectories.size() == static_cast<std::size_t>(ec.pretrain_steps / env->spec().episode_length));

  // Random baseline from the same start states.
  RandomAgent random(2, 5);
  const auto ro = rollout(*env, random, static_cast<int>(pr.trajectories.size()), 12345, false);
  Eigen::MatrixXd rand_states(4, 0);
  Eigen::MatrixXd pre_states(4, 0);
  for (const auto& r : ro) {
    rand_states.conservativeResize(4, rand_states.cols() + r.trajectory.states.cols());
    rand_states.rightCols(r.trajectory.states.cols()) = r.trajectory.states;
  }
  // Late pretraining episodes reflect the entropy-seeking policy.
  for (std::size_t i = pr.trajectories.size() / 2; i < pr.trajectories.size(); ++i) {
    const auto& s = pr.trajectories[i].states;
    pre_states.conservativeResize(4, pre_states.cols() + s.cols());
    pre_states.rightCols(s.cols()) = s;
  }
  CHECK(state_spread(pre_states.topRows(2)) >= state_spread(rand_states.topRows(2)));
}

namespace {

TrainConfig small_config(Algo algo) {
  TrainConfig c;
  c.env = "point_mass";
  c.algo = algo;
  c.total_steps = 2500;
  c.exploration.pretrain_steps = 500;
  c.exploration.random_steps = 200;
  c.feedback_period = 400;
  c.eval_period = 500;
  c.eval_episodes = 2;
  c.budget = 20;
  c.queries_per_session = 5;
  c.reward.epochs = 5;
  c.sac.hidden = {16, 16};
  c.ppo.hidden = {16, 16};
  c.ppo.rollout_steps = 200;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("trainer bookkeeping and determinism") {
  for (Algo algo : {Algo::kPebble, Algo::kPrefPpo}) {
    const TrainConfig c = small_config(algo);
    const TrainResult a = train_preference_rl(c);
    const TrainResult b = train_preference_rl(c);
    CHECK(a.planned_per_session == std::vector<int>{5, 5, 5, 5});
    CHECK(a.issued_per_session == std::vector<int>{5, 5, 5, 5});
    CHECK(a.queries.size() == 20);
    CHECK(a.record.curve.back().queries_used == 20);
    CHECK(a.record.curve.front().step == 500);
    CHECK(a.record.curve.back().step == 2500);
    CHECK(a.record.final_eval_returns.size() == 2);
    REQUIRE(a.record.curve.size() == b.record.curve.size());
    for (std::size_t i = 0; i < a.record.curve.size(); ++i) {
      CHECK(a.record.curve[i].true_return == b.record.curve[i].true_return);
      CHECK(a.record.curve[i].reward_loss == b.record.curve[i].reward_loss);
    }
    CHECK(a.ensemble != nullptr);
    if (algo == Algo::kPrefPpo) {
      CHECK(a.rollout_size_after_session == std::vector<std::size_t>{0, 0, 0, 0});
    }
  }
  const TrainResult gt = train_preference_rl(small_config(Algo::kSacGt));
  CHECK(gt.queries.empty());
  CHECK(gt.ensemble == nullptr);
  CHECK(gt.record.teacher == "none");
  CHECK(gt.record.curve.front().step == 0);

  TrainConfig bad = small_config(Algo::kPebble);
  bad.segment_length = 101;
  CHECK_THROWS(train_preference_rl(bad));
  bad = small_config(Algo::kPebble);
  bad.env = "cartpole";
  CHECK_THROWS(train_preference_rl(bad));
  CHECK(algo_from_string(to_string(Algo::kPrefPpo)) == Algo::kPrefPpo);
}

TEST_CASE("truncated final session") {
  TrainConfig c = small_config(Algo::kPebble);
  c.budget = 12;
  const TrainResult r = train_preference_rl(c);
  CHECK(r.planned_per_session.size() == 3);
  int total = 0;
  for (int n : r.issued_per_session) total += n;
  CHECK(total == 12);
}
