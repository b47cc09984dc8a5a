#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gpo/nn.hpp"
#include "gpo/rng.hpp"

namespace gpo {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int act_dim = 0;
  Vec action_low;
  Vec action_high;
  int horizon = 512;
  /// Per-step reward lies in [reward_min, reward_max] for in-bound states.
  double reward_min = 0.0;
  double reward_max = 0.0;
};

struct EnvState {
  Vec physical;
  int steps = 0;
};

struct ResetResult {
  EnvState state;
  Vec observation;
};

struct StepResult {
  EnvState state;
  Vec observation;
  double reward = 0.0;
  bool done = false;
};

/// Environment dynamics. Instances are stateless apart from an instrumented
/// counter of step() calls; the episode state travels in EnvState values.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual ResetResult reset(Rng& rng) const = 0;
  /// Clips the action to the spec bounds before applying the dynamics.
  StepResult step(const EnvState& state, std::span<const double> action);
  virtual std::unique_ptr<Env> clone() const = 0;

  std::int64_t step_calls() const { return step_calls_; }

 protected:
  virtual StepResult do_step(const EnvState& state, std::span<const double> clipped) const = 0;

 private:
  std::int64_t step_calls_ = 0;
};

struct Box2 {
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
};

/// Start and goal boxes; reset() picks one region uniformly, then samples the
/// start position and goal uniformly inside their boxes.
struct PointNavRegion {
  Box2 start;
  Box2 goal;
};

struct PointNavOptions {
  std::vector<PointNavRegion> regions;
  int horizon = 512;
  double max_step = 0.1;
  double goal_radius = 0.05;
  /// Positions are clamped to [-arena, arena]^2.
  double arena = 2.0;

  static PointNavOptions full();
  static PointNavOptions left();
  static PointNavOptions right();
};

/// Point mass steering toward a goal. Physical state (x, y, goal_x, goal_y);
/// observation (x, y, goal_x - x, goal_y - y); reward -||p' - goal||.
class PointNav : public Env {
 public:
  explicit PointNav(PointNavOptions options, std::string name = "pointnav");
  const EnvSpec& spec() const override { return spec_; }
  ResetResult reset(Rng& rng) const override;
  std::unique_ptr<Env> clone() const override;
  const PointNavOptions& options() const { return options_; }

  static Vec observe(const Vec& physical);

 protected:
  StepResult do_step(const EnvState& state, std::span<const double> clipped) const override;

 private:
  PointNavOptions options_;
  EnvSpec spec_;
};

struct PendulumOptions {
  int horizon = 512;
  double dt = 0.05;
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double max_torque = 2.0;
  double max_speed = 8.0;
  /// Initial angle ~ U(-pi, pi], initial velocity ~ U(-init_speed, init_speed).
  double init_speed = 1.0;
};

/// Torque-limited rigid pendulum, theta = 0 upright. Observation
/// (cos theta, sin theta, theta_dot).
class Pendulum : public Env {
 public:
  explicit Pendulum(PendulumOptions options = {});
  const EnvSpec& spec() const override { return spec_; }
  ResetResult reset(Rng& rng) const override;
  std::unique_ptr<Env> clone() const override;

  static Vec observe(const Vec& physical);
  /// Maps an angle to (-pi, pi].
  static double wrap_angle(double theta);

 protected:
  StepResult do_step(const EnvState& state, std::span<const double> clipped) const override;

 private:
  PendulumOptions options_;
  EnvSpec spec_;
};

/// "pointnav", "pointnav:left", "pointnav:right", "pendulum". horizon <= 0
/// keeps the default of 512.
std::unique_ptr<Env> make_env(const std::string& name, int horizon = 0);
bool is_known_env(const std::string& name);

}  // namespace gpo
