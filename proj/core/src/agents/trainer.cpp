#include "bpref/agents/trainer.hpp"

#include <deque>
#include <numeric>
#include <stdexcept>

#include "bpref/random.hpp"

namespace bpref {

std::string to_string(Algo a) {
  switch (a) {
    case Algo::kPebble:
      return "pebble";
    case Algo::kPrefPpo:
      return "prefppo";
    case Algo::kSacGt:
      return "sac_gt";
    case Algo::kPpoGt:
      return "ppo_gt";
  }
  return "pebble";
}

Algo algo_from_string(const std::string& name) {
  if (name == "pebble") return Algo::kPebble;
  if (name == "prefppo") return Algo::kPrefPpo;
  if (name == "sac_gt") return Algo::kSacGt;
  if (name == "ppo_gt") return Algo::kPpoGt;
  throw std::invalid_argument("unknown algo: " + name);
}

bool is_off_policy(Algo a) { return a == Algo::kPebble || a == Algo::kSacGt; }
bool uses_preferences(Algo a) { return a == Algo::kPebble || a == Algo::kPrefPpo; }

void TrainConfig::validate() const {
  teacher.validate();
  sampler.validate();
  if (budget < 0) throw std::invalid_argument("budget must be >= 0");
  if (queries_per_session < 1) throw std::invalid_argument("queries_per_session must be >= 1");
  if (feedback_period < 1) throw std::invalid_argument("feedback_period must be >= 1");
  if (segment_length < 1) throw std::invalid_argument("segment_length must be >= 1");
  if (total_steps < 1 || eval_period < 1 || eval_episodes < 1) {
    throw std::invalid_argument("total_steps, eval_period and eval_episodes must be positive");
  }
  if (exploration.pretrain_steps < 0 || exploration.pretrain_steps > total_steps) {
    throw std::invalid_argument("pretrain_steps must lie in [0, total_steps]");
  }
  const auto env_ptr = make_env(env);
  if (segment_length > env_ptr->spec().episode_length) {
    throw std::invalid_argument("segment_length exceeds the episode length");
  }
  if ((env_ptr->spec().action_low.array() != -1.0).any() || (env_ptr->spec().action_high.array() != 1.0).any()) {
    throw std::invalid_argument("agents expect action bounds [-1, 1]");
  }
  if (reward_member >= reward.ensemble_size) throw std::invalid_argument("reward_member out of range");
}

int TrainConfig::sessions() const {
  if (!uses_preferences(algo) || budget == 0) return 0;
  return (budget + queries_per_session - 1) / queries_per_session;
}

namespace {

class Run {
 public:
  explicit Run(const TrainConfig& cfg)
      : cfg_(cfg),
        env_(make_env(cfg.env)),
        spec_(env_->spec()),
        runner_(*env_),
        env_rng_(derive_seed(cfg.seed, "env")),
        batch_rng_(derive_seed(cfg.seed, "replay_batches")),
        eval_seed_(derive_seed(cfg.seed, "eval")),
        teacher_([&] {
          TeacherConfig t = cfg.teacher;
          t.rng_seed = derive_seed(cfg.seed, "teacher");
          return t;
        }()),
        sampler_([&] {
          SamplerConfig s = cfg.sampler;
          s.rng_seed = derive_seed(cfg.seed, "sampler");
          return s;
        }()) {
    cfg_.validate();
    result_.record.seed = cfg.seed;
    result_.record.env = cfg.env;
    result_.record.algo = to_string(cfg.algo);
    result_.record.teacher = uses_preferences(cfg.algo) ? cfg.teacher_name : "none";
    result_.record.budget = uses_preferences(cfg.algo) ? cfg.budget : 0;
    result_.record.run_id = cfg.env + "/" + result_.record.algo + "/" + result_.record.teacher + "/seed_" +
                            std::to_string(cfg.seed);
    if (uses_preferences(cfg.algo)) {
      RewardModelConfig rc = cfg.reward;
      rc.seed = derive_seed(cfg.seed, "reward_model");
      ensemble_ = std::make_unique<RewardEnsemble>(spec_.state_dim, spec_.action_dim, rc);
      const int n = cfg.sessions();
      if (n > 0) {
        ScheduleConfig sc;
        sc.kind = cfg.schedule;
        sc.total_budget = cfg.budget;
        sc.session_period = cfg.feedback_period;
        sc.episode_length = spec_.episode_length;
        sc.horizon = static_cast<long>(n) * cfg.feedback_period;
        result_.planned_per_session = plan(sc);
      }
    }
  }

  TrainResult execute() {
    if (is_off_policy(cfg_.algo)) {
      run_off_policy();
    } else {
      run_on_policy();
    }
    result_.teacher_ties = teacher_.tie_count();
    result_.teacher_flips = teacher_.flip_count();
    result_.ensemble = std::move(ensemble_);
    result_.record.validate();
    return std::move(result_);
  }

 private:
  double learned_reward(const Transition& tr) const {
    if (!ensemble_) return 0.0;
    return cfg_.reward_member < 0
               ? ensemble_->predict_reward(tr.state, tr.action)
               : ensemble_->predict_reward(static_cast<std::size_t>(cfg_.reward_member), tr.state, tr.action);
  }

  void begin_episode() {
    runner_.reset(env_rng_.engine()());
    cur_states_.resize(spec_.state_dim, spec_.episode_length);
    cur_actions_.resize(spec_.action_dim, spec_.episode_length);
    cur_rewards_.resize(spec_.episode_length);
  }

  // Records the step for segment extraction; starts a new episode at T.
  void record_step(const Transition& tr) {
    const int t = runner_.t() - 1;
    cur_states_.col(t) = tr.state;
    cur_actions_.col(t) = tr.action;
    cur_rewards_[t] = tr.reward_true;
    if (tr.done) {
      episodes_.push_back({cur_states_, cur_actions_, cur_rewards_});
      begin_episode();
    }
  }

  void evaluate(long step, Agent& agent) {
    const auto rollouts = rollout(*env_, agent, cfg_.eval_episodes, eval_seed_, true);
    CurveRow row;
    row.step = step;
    last_eval_returns_.clear();
    last_eval_success_.clear();
    for (const auto& r : rollouts) {
      row.true_return += r.true_return;
      row.success += r.success ? 1.0 : 0.0;
      recent_returns_.push_back(r.true_return);
      last_eval_returns_.push_back(r.true_return);
      last_eval_success_.push_back(r.success ? 1.0 : 0.0);
    }
    while (static_cast<int>(recent_returns_.size()) > cfg_.teacher.return_window) recent_returns_.pop_front();
    row.true_return /= static_cast<double>(rollouts.size());
    row.success /= static_cast<double>(rollouts.size());
    row.queries_used = queries_used_;
    row.reward_loss = last_reward_loss_;
    row.ensemble_disagreement = last_disagreement_;
    result_.record.curve.push_back(row);
  }

  bool session_due(long step) const {
    const long since = step - cfg_.exploration.pretrain_steps;
    return session_ < result_.planned_per_session.size() && since >= 0 &&
           since == static_cast<long>(session_) * cfg_.feedback_period;
  }

  // One feedback session; returns true when the reward model changed.
  bool feedback_session(long step) {
    const int planned = result_.planned_per_session[session_++];
    const int n = std::min(planned, cfg_.budget - queries_used_);
    if (n < planned) ++result_.truncated_sessions;
    std::vector<Segment> segments;
    for (const auto& ep : episodes_) {
      auto s = slice_segments(ep, cfg_.segment_length, cfg_.segment_stride);
      segments.insert(segments.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    if (n <= 0 || segments.size() < 2) {
      result_.issued_per_session.push_back(0);
      if (n > 0) ++result_.truncated_sessions;
      return false;
    }
    const auto pairs = sampler_.select(segments, *ensemble_, static_cast<std::size_t>(n));
    ThresholdContext ctx;
    ctx.segment_length = cfg_.segment_length;
    ctx.episode_length = spec_.episode_length;
    ctx.policy_avg_return =
        recent_returns_.empty()
            ? 0.0
            : std::accumulate(recent_returns_.begin(), recent_returns_.end(), 0.0) / recent_returns_.size();
    double disagreement = 0.0;
    for (const auto& p : pairs) {
      const Segment& s0 = segments[p.first];
      const Segment& s1 = segments[p.second];
      if (ensemble_->size() >= 2) disagreement += ensemble_->disagreement(s0, s1);
      const Preference label = teacher_.label(s0, s1, ctx);
      ++queries_used_;
      QueryLog q;
      q.query_step = step;
      q.label = label;
      q.sum0 = s0.true_return();
      q.sum1 = s1.true_return();
      q.discounted0 = discounted_return(s0, cfg_.teacher.gamma);
      q.discounted1 = discounted_return(s1, cfg_.teacher.gamma);
      result_.queries.push_back(q);
      store_.add(PreferenceRecord{s0, s1, label, step});
    }
    last_disagreement_ = pairs.empty() ? 0.0 : disagreement / static_cast<double>(pairs.size());
    result_.issued_per_session.push_back(static_cast<int>(pairs.size()));
    if (store_.empty()) return false;
    if (cfg_.reward_cold_start) ensemble_->reinitialize();
    last_reward_loss_ = ensemble_->train(store_).mean_loss();
    return true;
  }

  void run_off_policy() {
    auto agent = std::make_unique<SacAgent>(spec_.state_dim, spec_.action_dim, cfg_.sac,
                                            derive_seed(cfg_.seed, "agent"));
    ReplayBuffer buffer(spec_.state_dim, spec_.action_dim, cfg_.replay_capacity);
    const bool pref = uses_preferences(cfg_.algo);
    const RewardSource source = pref ? RewardSource::kLearned : RewardSource::kTrue;
    long step = 0;
    long warmup_until = cfg_.exploration.random_steps;
    if (pref && cfg_.exploration.pretrain_steps > 0) {
      PretrainResult pr = pretrain(*agent, *env_, buffer, cfg_.exploration, derive_seed(cfg_.seed, "explore"));
      for (auto& t : pr.trajectories) episodes_.push_back(std::move(t));
      step = pr.steps;
      warmup_until = 0;
      if (cfg_.reset_critic_after_pretrain) agent->reset_critics();
    }
    const long first_eval = step;
    Rng action_rng(derive_seed(cfg_.seed, "warmup_actions"));
    begin_episode();
    for (; step < cfg_.total_steps; ++step) {
      if (pref && session_due(step)) {
        if (feedback_session(step)) buffer.relabel(*ensemble_, cfg_.reward_member);
      }
      if ((step - first_eval) % cfg_.eval_period == 0) evaluate(step, *agent);
      Eigen::VectorXd action(spec_.action_dim);
      if (step < warmup_until) {
        for (int i = 0; i < spec_.action_dim; ++i) action[i] = action_rng.uniform(-1.0, 1.0);
      } else {
        action = agent->act(runner_.state(), false);
      }
      const Transition tr = runner_.step(action);
      buffer.add(tr, pref ? learned_reward(tr) : 0.0);
      record_step(tr);
      if (step >= warmup_until) {
        agent->update(buffer.sample(static_cast<std::size_t>(cfg_.sac.batch_size), batch_rng_, source));
      }
    }
    finish(step, *agent);
    result_.agent = std::move(agent);
  }

  void run_on_policy() {
    auto agent = std::make_unique<PpoAgent>(spec_.state_dim, spec_.action_dim, cfg_.ppo,
                                            derive_seed(cfg_.seed, "agent"));
    const bool pref = uses_preferences(cfg_.algo);
    long step = 0;
    if (pref && cfg_.exploration.pretrain_steps > 0) {
      PretrainResult pr = pretrain(*agent, *env_, cfg_.exploration, derive_seed(cfg_.seed, "explore"));
      for (auto& t : pr.trajectories) episodes_.push_back(std::move(t));
      step = pr.steps;
    }
    const long first_eval = step;
    RolloutStorage storage;
    begin_episode();
    for (; step < cfg_.total_steps; ++step) {
      if (pref && session_due(step)) {
        // The on-policy buffer is discarded after every session.
        feedback_session(step);
        storage.clear();
        result_.rollout_size_after_session.push_back(storage.size());
      }
      if ((step - first_eval) % cfg_.eval_period == 0) evaluate(step, *agent);
      double lp = 0.0;
      const Eigen::VectorXd raw = agent->sample(runner_.state(), lp);
      const Transition tr = runner_.step(raw);
      storage.states.push_back(tr.state);
      storage.actions.push_back(raw);
      storage.next_states.push_back(tr.next_state);
      storage.log_probs.push_back(lp);
      storage.rewards.push_back(pref ? learned_reward(tr) : tr.reward_true);
      storage.done.push_back(tr.done);
      storage.terminal.push_back(tr.terminal);
      record_step(tr);
      if (static_cast<int>(storage.size()) >= cfg_.ppo.rollout_steps) {
        agent->update(storage);
        storage.clear();
      }
    }
    finish(step, *agent);
    result_.agent = std::move(agent);
  }

  void finish(long step, Agent& agent) {
    if (result_.record.curve.empty() || result_.record.curve.back().step != step) evaluate(step, agent);
    result_.record.final_eval_returns = last_eval_returns_;
    result_.record.final_eval_success = last_eval_success_;
  }

  TrainConfig cfg_;
  std::unique_ptr<Env> env_;
  const EnvSpec& spec_;
  EpisodeRunner runner_;
  Rng env_rng_;
  Rng batch_rng_;
  std::uint64_t eval_seed_;
  SimTeacher teacher_;
  QuerySampler sampler_;
  std::unique_ptr<RewardEnsemble> ensemble_;
  AnnotationStore store_;
  std::vector<Trajectory> episodes_;
  Eigen::MatrixXd cur_states_;
  Eigen::MatrixXd cur_actions_;
  Eigen::VectorXd cur_rewards_;
  std::deque<double> recent_returns_;
  std::vector<double> last_eval_returns_;
  std::vector<double> last_eval_success_;
  std::size_t session_ = 0;
  int queries_used_ = 0;
  double last_reward_loss_ = 0.0;
  double last_disagreement_ = 0.0;
  TrainResult result_;
};

}  // namespace

TrainResult train_preference_rl(const TrainConfig& config) { return Run(config).execute(); }

}  // namespace bpref
