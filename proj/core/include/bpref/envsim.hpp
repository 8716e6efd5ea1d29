#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace bpref {

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;
  int episode_length = 0;  // T
  // Documented per-step bounds of reward_true.
  double reward_min = 0.0;
  double reward_max = 0.0;
  bool has_success = false;
};

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  Eigen::VectorXd next_state;
  double reward_true = 0.0;
  bool done = false;      // last step of the episode
  bool terminal = false;  // absorbing; no bootstrap past it (time limits are not terminal)
};

// H consecutive (state, action, reward_true) triples stored column-wise.
struct Segment {
  Eigen::MatrixXd states;   // state_dim x H
  Eigen::MatrixXd actions;  // action_dim x H
  Eigen::VectorXd rewards;  // H

  int length() const { return static_cast<int>(rewards.size()); }
  double true_return() const { return rewards.sum(); }
};

struct Trajectory {
  Eigen::MatrixXd states;   // state_dim x L
  Eigen::MatrixXd actions;  // action_dim x L
  Eigen::VectorXd rewards;  // L

  int length() const { return static_cast<int>(rewards.size()); }
};

// A built-in task. Dynamics are deterministic functions of (state, action),
// so one instance holds no mutable state and may be shared by const reference.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  // Draws an initial state; identical seed gives an identical state.
  virtual Eigen::VectorXd reset(std::uint64_t seed) const = 0;
  // Clamps the action into bounds and advances one step. `done` is left
  // false; episode bookkeeping belongs to the caller (see EpisodeRunner).
  Transition step(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;
  virtual bool success(const Eigen::VectorXd& /*state*/) const { return false; }

 protected:
  virtual Eigen::VectorXd dynamics(const Eigen::VectorXd& state,
                                   const Eigen::VectorXd& action) const = 0;
  virtual double reward(const Eigen::VectorXd& next_state,
                        const Eigen::VectorXd& action) const = 0;
};

// 2-D double integrator on [-1,1]^2 reaching a fixed goal. State (x, y, vx, vy);
// v' = damping * v + accel * a, p' = clamp(p + v'), velocity zeroed at walls.
// reward = exp(-|pos - goal| / reward_scale), in (0, 1].
class PointMassEnv final : public Env {
 public:
  struct Options {
    int episode_length = 100;
    double goal_x = 0.0;
    double goal_y = 0.0;
    double reward_scale = 0.5;
    double damping = 0.8;
    double accel = 0.02;  // terminal speed accel / (1 - damping) per step
  };

  PointMassEnv();
  explicit PointMassEnv(Options options);

  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  bool success(const Eigen::VectorXd& state) const override;
  const Options& options() const { return options_; }

  // Closed form of the per-step reward at a position.
  double reward_at(double x, double y) const;

 protected:
  Eigen::VectorXd dynamics(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;

 private:
  Options options_;
  EnvSpec spec_;
};

// Torque-limited pendulum swing-up. State (cos th, sin th, omega) with th = 0
// upright. reward = (1 + cos th) / 2 - 0.01 * (omega / max_speed)^2.
class PendulumEnv final : public Env {
 public:
  struct Options {
    int episode_length = 100;
    double max_torque = 2.0;
    double max_speed = 8.0;
    double dt = 0.05;
    double gravity = 10.0;
    double mass = 1.0;
    double length = 1.0;
    double init_angle_range = 3.141592653589793;  // |th0| <= range
    double init_speed_range = 1.0;
  };

  PendulumEnv();
  explicit PendulumEnv(Options options);

  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  const Options& options() const { return options_; }

 protected:
  Eigen::VectorXd dynamics(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;

 private:
  Options options_;
  EnvSpec spec_;
};

// Kinematic pusher moving a disc into a target zone (desk-scale Sweep Into).
// State (hand x, hand y, object x, object y). Contact resolves overlap by
// pushing the object along the hand-object normal.
// reward = 0.25 * exp(-|hand - obj| / 0.3) + 0.75 * exp(-|obj - zone| / 0.3).
class PushEnv final : public Env {
 public:
  struct Options {
    int episode_length = 100;
    double zone_x = 0.6;
    double zone_y = 0.6;
    double success_radius = 0.15;
    double hand_radius = 0.05;
    double object_radius = 0.08;
    double hand_speed = 0.08;
  };

  PushEnv();
  explicit PushEnv(Options options);

  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(std::uint64_t seed) const override;
  bool success(const Eigen::VectorXd& state) const override;
  const Options& options() const { return options_; }

 protected:
  Eigen::VectorXd dynamics(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override;
  double reward(const Eigen::VectorXd& next_state, const Eigen::VectorXd& action) const override;

 private:
  Options options_;
  EnvSpec spec_;
};

// Registry: "point_mass", "pendulum", "push".
std::unique_ptr<Env> make_env(const std::string& name);
std::vector<std::string> env_names();

// Tracks the step counter of one episode and sets Transition::done at T.
class EpisodeRunner {
 public:
  explicit EpisodeRunner(const Env& env) : env_(&env) {}

  const Eigen::VectorXd& reset(std::uint64_t seed);
  Transition step(const Eigen::VectorXd& action);

  const Eigen::VectorXd& state() const { return state_; }
  int t() const { return t_; }
  bool finished() const { return t_ >= env_->spec().episode_length; }

 private:
  const Env* env_;
  Eigen::VectorXd state_;
  int t_ = 0;
};

// All windows of length H starting at 0, stride, 2*stride, ... that fit.
std::vector<Segment> slice_segments(const Trajectory& trajectory, int segment_length, int stride = 0);

}  // namespace bpref
