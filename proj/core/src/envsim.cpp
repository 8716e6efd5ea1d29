#include "bpref/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bpref/random.hpp"

namespace bpref {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

EnvSpec make_spec(std::string name, int state_dim, int action_dim, int episode_length,
                  double reward_min, double reward_max, bool has_success) {
  if (episode_length <= 0) throw std::invalid_argument("episode length must be positive");
  EnvSpec s;
  s.name = std::move(name);
  s.state_dim = state_dim;
  s.action_dim = action_dim;
  s.action_low = Eigen::VectorXd::Constant(action_dim, -1.0);
  s.action_high = Eigen::VectorXd::Constant(action_dim, 1.0);
  s.episode_length = episode_length;
  s.reward_min = reward_min;
  s.reward_max = reward_max;
  s.has_success = has_success;
  return s;
}

}  // namespace

Transition Env::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  const EnvSpec& s = spec();
  if (state.size() != s.state_dim || action.size() != s.action_dim) {
    throw std::invalid_argument(s.name + ": state/action dimension mismatch");
  }
  if (!all_finite(state) || !all_finite(action)) {
    throw std::invalid_argument(s.name + ": non-finite state or action");
  }
  Transition tr;
  tr.state = state;
  tr.action = action.cwiseMax(s.action_low).cwiseMin(s.action_high);
  tr.next_state = dynamics(state, tr.action);
  tr.reward_true = reward(tr.next_state, tr.action);
  return tr;
}

// ---- point mass ------------------------------------------------------------

PointMassEnv::PointMassEnv() : PointMassEnv(Options{}) {}

PointMassEnv::PointMassEnv(Options options)
    : options_(options),
      spec_(make_spec("point_mass", 4, 2, options.episode_length,
                      std::exp(-2.0 * std::sqrt(2.0) / options.reward_scale), 1.0, true)) {}

Eigen::VectorXd PointMassEnv::reset(std::uint64_t seed) const {
  Rng rng(seed);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(4);
  s[0] = rng.uniform(-1.0, 1.0);
  s[1] = rng.uniform(-1.0, 1.0);
  return s;
}

Eigen::VectorXd PointMassEnv::dynamics(const Eigen::VectorXd& state,
                                       const Eigen::VectorXd& action) const {
  Eigen::VectorXd next(4);
  for (int i = 0; i < 2; ++i) {
    double v = options_.damping * state[2 + i] + options_.accel * action[i];
    double p = state[i] + v;
    if (p > 1.0 || p < -1.0) {
      p = std::clamp(p, -1.0, 1.0);
      v = 0.0;
    }
    next[i] = p;
    next[2 + i] = v;
  }
  return next;
}

double PointMassEnv::reward_at(double x, double y) const {
  const double d = std::hypot(x - options_.goal_x, y - options_.goal_y);
  return std::exp(-d / options_.reward_scale);
}

double PointMassEnv::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  return reward_at(next_state[0], next_state[1]);
}

bool PointMassEnv::success(const Eigen::VectorXd& state) const {
  return std::hypot(state[0] - options_.goal_x, state[1] - options_.goal_y) < 0.1;
}

// ---- pendulum --------------------------------------------------------------

PendulumEnv::PendulumEnv() : PendulumEnv(Options{}) {}

PendulumEnv::PendulumEnv(Options options)
    : options_(options), spec_(make_spec("pendulum", 3, 1, options.episode_length, -0.01, 1.0, false)) {}

Eigen::VectorXd PendulumEnv::reset(std::uint64_t seed) const {
  Rng rng(seed);
  const double th = rng.uniform(-options_.init_angle_range, options_.init_angle_range);
  const double w = rng.uniform(-options_.init_speed_range, options_.init_speed_range);
  Eigen::VectorXd s(3);
  s << std::cos(th), std::sin(th), w;
  return s;
}

Eigen::VectorXd PendulumEnv::dynamics(const Eigen::VectorXd& state,
                                      const Eigen::VectorXd& action) const {
  const double th = std::atan2(state[1], state[0]);
  const double u = options_.max_torque * action[0];
  const double g = options_.gravity;
  const double m = options_.mass;
  const double l = options_.length;
  double w = state[2] + (3.0 * g / (2.0 * l) * std::sin(th) + 3.0 / (m * l * l) * u) * options_.dt;
  w = std::clamp(w, -options_.max_speed, options_.max_speed);
  const double th_next = th + w * options_.dt;
  Eigen::VectorXd next(3);
  next << std::cos(th_next), std::sin(th_next), w;
  return next;
}

double PendulumEnv::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  const double speed = next_state[2] / options_.max_speed;
  return 0.5 * (1.0 + next_state[0]) - 0.01 * speed * speed;
}

// ---- push ------------------------------------------------------------------

PushEnv::PushEnv() : PushEnv(Options{}) {}

PushEnv::PushEnv(Options options)
    : options_(options), spec_(make_spec("push", 4, 2, options.episode_length, 0.0, 1.0, true)) {}

Eigen::VectorXd PushEnv::reset(std::uint64_t seed) const {
  Rng rng(seed);
  Eigen::VectorXd s(4);
  s[0] = rng.uniform(-0.9, -0.6);
  s[1] = rng.uniform(-0.9, 0.9);
  s[2] = rng.uniform(-0.4, 0.2);
  s[3] = rng.uniform(-0.4, 0.2);
  return s;
}

Eigen::VectorXd PushEnv::dynamics(const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& action) const {
  Eigen::Vector2d hand(state[0], state[1]);
  Eigen::Vector2d obj(state[2], state[3]);
  hand += options_.hand_speed * Eigen::Vector2d(action[0], action[1]);
  hand = hand.cwiseMax(-1.0).cwiseMin(1.0);
  const double contact = options_.hand_radius + options_.object_radius;
  const Eigen::Vector2d rel = obj - hand;
  const double dist = rel.norm();
  if (dist < contact) {
    // Degenerate overlap: push along the action direction.
    Eigen::Vector2d normal = dist > 1e-12 ? Eigen::Vector2d(rel / dist) : Eigen::Vector2d(action[0], action[1]);
    if (normal.norm() < 1e-12) normal = Eigen::Vector2d(1.0, 0.0);
    normal.normalize();
    obj = hand + contact * normal;
    obj = obj.cwiseMax(-1.0).cwiseMin(1.0);
  }
  Eigen::VectorXd next(4);
  next << hand[0], hand[1], obj[0], obj[1];
  return next;
}

double PushEnv::reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd&) const {
  const double reach = std::hypot(next_state[0] - next_state[2], next_state[1] - next_state[3]);
  const double place = std::hypot(next_state[2] - options_.zone_x, next_state[3] - options_.zone_y);
  return 0.25 * std::exp(-reach / 0.3) + 0.75 * std::exp(-place / 0.3);
}

bool PushEnv::success(const Eigen::VectorXd& state) const {
  return std::hypot(state[2] - options_.zone_x, state[3] - options_.zone_y) < options_.success_radius;
}

// ---- registry & helpers ----------------------------------------------------

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "point_mass") return std::make_unique<PointMassEnv>();
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "push") return std::make_unique<PushEnv>();
  throw std::invalid_argument("unknown environment: " + name);
}

std::vector<std::string> env_names() { return {"point_mass", "pendulum", "push"}; }

const Eigen::VectorXd& EpisodeRunner::reset(std::uint64_t seed) {
  state_ = env_->reset(seed);
  t_ = 0;
  return state_;
}

Transition EpisodeRunner::step(const Eigen::VectorXd& action) {
  if (finished()) throw std::logic_error("episode already finished; call reset");
  Transition tr = env_->step(state_, action);
  ++t_;
  tr.done = finished();
  state_ = tr.next_state;
  return tr;
}

std::vector<Segment> slice_segments(const Trajectory& trajectory, int segment_length, int stride) {
  if (segment_length < 1) throw std::invalid_argument("segment length must be >= 1");
  if (segment_length > trajectory.length()) {
    throw std::invalid_argument("segment length exceeds trajectory length");
  }
  if (stride <= 0) stride = segment_length;
  std::vector<Segment> out;
  for (int start = 0; start + segment_length <= trajectory.length(); start += stride) {
    out.push_back({trajectory.states.middleCols(start, segment_length),
                   trajectory.actions.middleCols(start, segment_length),
                   trajectory.rewards.segment(start, segment_length)});
  }
  return out;
}

}  // namespace bpref
