#include "bpref/agents/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bpref/random.hpp"

namespace bpref {

double intrinsic_reward(const Eigen::VectorXd& state, const Eigen::MatrixXd& state_set, int k,
                        double distance_floor) {
  if (k < 1) throw std::invalid_argument("intrinsic_reward: k must be >= 1");
  if (state_set.cols() <= k) throw std::invalid_argument("intrinsic_reward: need more than k states");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(state_set.cols()));
  bool self_skipped = false;
  for (Eigen::Index j = 0; j < state_set.cols(); ++j) {
    const double d = (state_set.col(j) - state).norm();
    if (!self_skipped && d == 0.0) {
      self_skipped = true;
      continue;
    }
    dist.push_back(d);
  }
  if (static_cast<int>(dist.size()) < k) throw std::invalid_argument("intrinsic_reward: need more than k states");
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  return std::log(std::max(dist[static_cast<std::size_t>(k - 1)], distance_floor));
}

Eigen::VectorXd intrinsic_rewards(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& state_set, int k,
                                  double distance_floor) {
  Eigen::VectorXd r(queries.cols());
  for (Eigen::Index i = 0; i < queries.cols(); ++i) {
    r[i] = intrinsic_reward(queries.col(i), state_set, k, distance_floor);
  }
  return r;
}

double state_spread(const Eigen::MatrixXd& states) {
  if (states.cols() < 2) return 0.0;
  const Eigen::VectorXd mean = states.rowwise().mean();
  const Eigen::MatrixXd centered = states.colwise() - mean;
  return centered.squaredNorm() / static_cast<double>(states.cols() - 1);
}

namespace {

// Accumulates one episode's transitions into a Trajectory.
class EpisodeRecorder {
 public:
  EpisodeRecorder(int state_dim, int action_dim, int length)
      : state_dim_(state_dim), action_dim_(action_dim), length_(length) {
    start();
  }

  void add(const Transition& tr) {
    cur_.states.col(t_) = tr.state;
    cur_.actions.col(t_) = tr.action;
    cur_.rewards[t_] = tr.reward_true;
    ++t_;
  }

  Trajectory finish() {
    Trajectory done = std::move(cur_);
    start();
    return done;
  }

 private:
  void start() {
    cur_.states.resize(state_dim_, length_);
    cur_.actions.resize(action_dim_, length_);
    cur_.rewards.resize(length_);
    t_ = 0;
  }

  int state_dim_;
  int action_dim_;
  int length_;
  Trajectory cur_;
  int t_ = 0;
};

}  // namespace

PretrainResult pretrain(SacAgent& agent, const Env& env, ReplayBuffer& buffer, const ExplorationConfig& cfg,
                        std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  Rng env_rng(derive_seed(seed, "pretrain_env"));
  Rng action_rng(derive_seed(seed, "pretrain_actions"));
  Rng batch_rng(derive_seed(seed, "pretrain_batches"));
  EpisodeRunner runner(env);
  runner.reset(env_rng.engine()());
  EpisodeRecorder recorder(spec.state_dim, spec.action_dim, spec.episode_length);
  PretrainResult result;
  for (long step = 0; step < cfg.pretrain_steps; ++step) {
    Eigen::VectorXd action(spec.action_dim);
    if (step < cfg.random_steps) {
      for (int i = 0; i < spec.action_dim; ++i) action[i] = action_rng.uniform(-1.0, 1.0);
    } else {
      action = agent.act(runner.state(), false);
    }
    const Transition tr = runner.step(action);
    buffer.add(tr, 0.0);
    recorder.add(tr);
    if (tr.done) {
      result.trajectories.push_back(recorder.finish());
      ++result.episodes;
      runner.reset(env_rng.engine()());
    }
    if (step >= cfg.random_steps && buffer.size() > static_cast<std::size_t>(cfg.k)) {
      ReplayBuffer::Batch batch =
          buffer.sample(static_cast<std::size_t>(agent.config().batch_size), batch_rng, RewardSource::kLearned);
      Eigen::MatrixXd reference = buffer.next_states();
      if (static_cast<std::size_t>(reference.cols()) > cfg.max_reference) {
        reference = reference.rightCols(static_cast<Eigen::Index>(cfg.max_reference)).eval();
      }
      batch.rewards = intrinsic_rewards(batch.next_states, reference, cfg.k, cfg.distance_floor);
      agent.update(batch);
    }
    ++result.steps;
  }
  return result;
}

PretrainResult pretrain(PpoAgent& agent, const Env& env, const ExplorationConfig& cfg, std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  Rng env_rng(derive_seed(seed, "pretrain_env"));
  EpisodeRunner runner(env);
  runner.reset(env_rng.engine()());
  EpisodeRecorder recorder(spec.state_dim, spec.action_dim, spec.episode_length);
  PretrainResult result;
  RolloutStorage storage;
  std::vector<Eigen::VectorXd> seen;
  for (long step = 0; step < cfg.pretrain_steps; ++step) {
    double lp = 0.0;
    const Eigen::VectorXd raw = agent.sample(runner.state(), lp);
    const Transition tr = runner.step(raw);
    storage.states.push_back(tr.state);
    storage.actions.push_back(raw);
    storage.next_states.push_back(tr.next_state);
    storage.log_probs.push_back(lp);
    storage.rewards.push_back(0.0);
    storage.done.push_back(tr.done);
    storage.terminal.push_back(tr.terminal);
    seen.push_back(tr.next_state);
    recorder.add(tr);
    if (tr.done) {
      result.trajectories.push_back(recorder.finish());
      ++result.episodes;
      runner.reset(env_rng.engine()());
    }
    const bool last = step + 1 == cfg.pretrain_steps;
    if (static_cast<int>(storage.size()) == agent.config().rollout_steps || last) {
      const std::size_t first = seen.size() > cfg.max_reference ? seen.size() - cfg.max_reference : 0;
      Eigen::MatrixXd reference(spec.state_dim, static_cast<Eigen::Index>(seen.size() - first));
      for (std::size_t i = first; i < seen.size(); ++i) reference.col(static_cast<Eigen::Index>(i - first)) = seen[i];
      if (reference.cols() > cfg.k) {
        for (std::size_t i = 0; i < storage.size(); ++i) {
          storage.rewards[i] = intrinsic_reward(storage.next_states[i], reference, cfg.k, cfg.distance_floor);
        }
        agent.update(storage);
      }
      storage.clear();
    }
    ++result.steps;
  }
  return result;
}

}  // namespace bpref
