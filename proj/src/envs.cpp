#include "gpo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpo {

StepResult Env::step(const EnvState& state, std::span<const double> action) {
  const EnvSpec& s = spec();
  if (static_cast<int>(action.size()) != s.act_dim)
    throw ShapeError(s.name + ": action has " + std::to_string(action.size()) +
                     " entries, expected " + std::to_string(s.act_dim));
  Vec clipped(action.begin(), action.end());
  for (int i = 0; i < s.act_dim; ++i)
    clipped[i] = std::clamp(clipped[i], s.action_low[i], s.action_high[i]);
  ++step_calls_;
  return do_step(state, clipped);
}

// ---- PointNav ----

PointNavOptions PointNavOptions::full() {
  PointNavOptions o = left();
  o.regions.push_back(right().regions.front());
  return o;
}

PointNavOptions PointNavOptions::left() {
  PointNavOptions o;
  const Box2 box{-1.5, -0.5, -1.0, 1.0};
  o.regions = {PointNavRegion{box, box}};
  return o;
}

PointNavOptions PointNavOptions::right() {
  PointNavOptions o;
  const Box2 box{0.5, 1.5, -1.0, 1.0};
  o.regions = {PointNavRegion{box, box}};
  return o;
}

PointNav::PointNav(PointNavOptions options, std::string name) : options_(std::move(options)) {
  if (options_.regions.empty()) throw std::invalid_argument("pointnav needs at least one region");
  spec_.name = std::move(name);
  spec_.obs_dim = 4;
  spec_.act_dim = 2;
  spec_.action_low = {-options_.max_step, -options_.max_step};
  spec_.action_high = {options_.max_step, options_.max_step};
  spec_.horizon = options_.horizon;
  spec_.reward_min = -2.0 * std::sqrt(2.0) * options_.arena;
  spec_.reward_max = 0.0;
}

Vec PointNav::observe(const Vec& s) { return {s[0], s[1], s[2] - s[0], s[3] - s[1]}; }

ResetResult PointNav::reset(Rng& rng) const {
  std::size_t r = 0;
  if (options_.regions.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, options_.regions.size() - 1);
    r = pick(rng);
  }
  const PointNavRegion& reg = options_.regions[r];
  EnvState st;
  st.physical = {uniform(rng, reg.start.x_lo, reg.start.x_hi), uniform(rng, reg.start.y_lo, reg.start.y_hi),
                 uniform(rng, reg.goal.x_lo, reg.goal.x_hi), uniform(rng, reg.goal.y_lo, reg.goal.y_hi)};
  return {st, observe(st.physical)};
}

StepResult PointNav::do_step(const EnvState& state, std::span<const double> a) const {
  StepResult r;
  r.state = state;
  Vec& s = r.state.physical;
  s[0] = std::clamp(s[0] + a[0], -options_.arena, options_.arena);
  s[1] = std::clamp(s[1] + a[1], -options_.arena, options_.arena);
  r.state.steps = state.steps + 1;
  const double dist = std::hypot(s[2] - s[0], s[3] - s[1]);
  r.reward = -dist;
  r.done = r.state.steps >= options_.horizon || dist <= options_.goal_radius;
  r.observation = observe(s);
  return r;
}

std::unique_ptr<Env> PointNav::clone() const { return std::make_unique<PointNav>(options_, spec_.name); }

// ---- Pendulum ----

Pendulum::Pendulum(PendulumOptions options) : options_(options) {
  spec_.name = "pendulum";
  spec_.obs_dim = 3;
  spec_.act_dim = 1;
  spec_.action_low = {-options_.max_torque};
  spec_.action_high = {options_.max_torque};
  spec_.horizon = options_.horizon;
  const double pi = std::numbers::pi;
  spec_.reward_min = -(pi * pi + 0.1 * options_.max_speed * options_.max_speed +
                       0.001 * options_.max_torque * options_.max_torque);
  spec_.reward_max = 0.0;
}

double Pendulum::wrap_angle(double theta) {
  const double pi = std::numbers::pi;
  double w = std::fmod(theta + pi, 2.0 * pi);
  if (w < 0) w += 2.0 * pi;
  w -= pi;
  return w == -pi ? pi : w;
}

Vec Pendulum::observe(const Vec& s) { return {std::cos(s[0]), std::sin(s[0]), s[1]}; }

ResetResult Pendulum::reset(Rng& rng) const {
  const double pi = std::numbers::pi;
  EnvState st;
  const double theta = wrap_angle(uniform(rng, -pi, pi));
  st.physical = {theta, uniform(rng, -options_.init_speed, options_.init_speed)};
  return {st, observe(st.physical)};
}

StepResult Pendulum::do_step(const EnvState& state, std::span<const double> a) const {
  const double theta = state.physical[0];
  const double omega = state.physical[1];
  const double u = a[0];
  const double g = options_.gravity;
  const double m = options_.mass;
  const double l = options_.length;
  const double th = wrap_angle(theta);

  StepResult r;
  r.reward = -(th * th + 0.1 * omega * omega + 0.001 * u * u);
  double next_omega = omega + (3.0 * g / (2.0 * l) * std::sin(theta) + 3.0 / (m * l * l) * u) * options_.dt;
  next_omega = std::clamp(next_omega, -options_.max_speed, options_.max_speed);
  r.state.physical = {wrap_angle(theta + next_omega * options_.dt), next_omega};
  r.state.steps = state.steps + 1;
  r.done = r.state.steps >= options_.horizon;
  r.observation = observe(r.state.physical);
  return r;
}

std::unique_ptr<Env> Pendulum::clone() const { return std::make_unique<Pendulum>(options_); }

// ---- factory ----

bool is_known_env(const std::string& name) {
  return name == "pointnav" || name == "pointnav:left" || name == "pointnav:right" || name == "pendulum";
}

std::unique_ptr<Env> make_env(const std::string& name, int horizon) {
  if (name == "pendulum") {
    PendulumOptions o;
    if (horizon > 0) o.horizon = horizon;
    return std::make_unique<Pendulum>(o);
  }
  PointNavOptions o;
  if (name == "pointnav")
    o = PointNavOptions::full();
  else if (name == "pointnav:left")
    o = PointNavOptions::left();
  else if (name == "pointnav:right")
    o = PointNavOptions::right();
  else
    throw std::invalid_argument("unknown environment '" + name +
                                "' (expected pointnav, pointnav:left, pointnav:right, pendulum)");
  if (horizon > 0) o.horizon = horizon;
  return std::make_unique<PointNav>(o, name);
}

}  // namespace gpo
