#include "bpref/agents/agent.hpp"

namespace bpref {

std::vector<Rollout> rollout(const Env& env, Agent& agent, int episodes, std::uint64_t seed,
                             bool deterministic) {
  const EnvSpec& spec = env.spec();
  std::vector<Rollout> out;
  EpisodeRunner runner(env);
  for (int e = 0; e < episodes; ++e) {
    runner.reset(seed + static_cast<std::uint64_t>(e));
    Rollout r;
    r.trajectory.states.resize(spec.state_dim, spec.episode_length);
    r.trajectory.actions.resize(spec.action_dim, spec.episode_length);
    r.trajectory.rewards.resize(spec.episode_length);
    for (int t = 0; !runner.finished(); ++t) {
      const Transition tr = runner.step(agent.act(runner.state(), deterministic));
      r.trajectory.states.col(t) = tr.state;
      r.trajectory.actions.col(t) = tr.action;
      r.trajectory.rewards[t] = tr.reward_true;
      r.true_return += tr.reward_true;
    }
    r.success = env.success(runner.state());
    out.push_back(std::move(r));
  }
  return out;
}

RandomAgent::RandomAgent(int action_dim, std::uint64_t seed) : action_dim_(action_dim), rng_(seed) {}

Eigen::VectorXd RandomAgent::act(const Eigen::VectorXd&, bool) {
  Eigen::VectorXd a(action_dim_);
  for (int i = 0; i < action_dim_; ++i) a[i] = rng_.uniform(-1.0, 1.0);
  return a;
}

}  // namespace bpref
