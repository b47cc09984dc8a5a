#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "gpo/envs.hpp"

using namespace gpo;

TEST_CASE("specs") {
  auto nav = make_env("pointnav");
  CHECK(nav->spec().obs_dim == 4);
  CHECK(nav->spec().act_dim == 2);
  auto pend = make_env("pendulum");
  CHECK(pend->spec().obs_dim == 3);
  CHECK(pend->spec().act_dim == 1);
  CHECK(pend->spec().action_low == Vec{-2.0});
  CHECK(pend->spec().action_high == Vec{2.0});
  CHECK(make_env("pointnav:left", 64)->spec().horizon == 64);
  CHECK(is_known_env("pointnav:right"));
  CHECK_FALSE(is_known_env("hopper"));
  try {
    make_env("hopper");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("hopper") != std::string::npos);
    CHECK(msg.find("pendulum") != std::string::npos);
  }
}

TEST_CASE("pointnav dynamics") {
  PointNav env(PointNavOptions::full());
  EnvState s{{0.0, 0.0, 1.0, 0.0}, 0};
  StepResult r = env.step(s, Vec{0.1, 0.0});
  CHECK(r.state.physical[0] == doctest::Approx(0.1));
  CHECK(r.state.physical[1] == 0.0);
  CHECK(r.reward == doctest::Approx(-0.9));
  CHECK_FALSE(r.done);
  CHECK(r.observation == Vec{0.1, 0.0, 0.9, 0.0});

  // zero action: position unchanged, reward is minus the distance
  EnvState s2{{0.3, -0.4, -1.2, 0.8}, 3};
  StepResult r2 = env.step(s2, Vec{0.0, 0.0});
  CHECK(r2.state.physical == s2.physical);
  CHECK(r2.reward == doctest::Approx(-std::hypot(1.5, 1.2)));

  // out-of-bound actions are clipped, not rejected
  StepResult r3 = env.step(s, Vec{5.0, -5.0});
  CHECK(r3.state.physical[0] == doctest::Approx(0.1));
  CHECK(r3.state.physical[1] == doctest::Approx(-0.1));
  CHECK_THROWS_AS(env.step(s, Vec{0.1}), ShapeError);

  // arena clamp
  EnvState edge{{2.0, -2.0, 0.0, 0.0}, 0};
  CHECK(env.step(edge, Vec{0.1, -0.1}).state.physical[0] == 2.0);

  // goal reached
  EnvState near{{0.0, 0.0, 0.12, 0.0}, 0};
  CHECK(env.step(near, Vec{0.1, 0.0}).done);
  // horizon
  EnvState late{{0.0, 0.0, 1.0, 1.0}, 511};
  CHECK(env.step(late, Vec{0.0, 0.0}).done);
  CHECK(env.step_calls() == 6);  // the rejected step is not counted
}

TEST_CASE("pointnav resets") {
  PointNavOptions o;
  const Box2 point{0.25, 0.25, -0.5, -0.5};
  o.regions = {PointNavRegion{point, Box2{1.0, 1.0, 1.0, 1.0}}};
  PointNav env(o);
  Rng rng(1);
  const auto r = env.reset(rng);
  CHECK(r.state.physical == Vec{0.25, -0.5, 1.0, 1.0});

  auto nav = make_env("pointnav");
  Rng a(42), b(42);
  CHECK(nav->reset(a).state.physical == nav->reset(b).state.physical);

  // region variants stay inside their boxes; the mixture visits both
  auto left = make_env("pointnav:left");
  auto right = make_env("pointnav:right");
  int left_count = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec l = left->reset(rng).state.physical;
    CHECK((l[0] >= -1.5 && l[0] <= -0.5 && l[2] >= -1.5 && l[2] <= -0.5));
    const Vec rr = right->reset(rng).state.physical;
    CHECK((rr[0] >= 0.5 && rr[0] <= 1.5));
    if (nav->reset(rng).state.physical[0] < 0) ++left_count;
  }
  CHECK(std::abs(left_count - 1000) < 3 * std::sqrt(500.0));
}

TEST_CASE("pendulum dynamics") {
  Pendulum env;
  EnvState up{{0.0, 0.0}, 0};
  StepResult r = env.step(up, Vec{0.0});
  CHECK(r.state.physical == Vec{0.0, 0.0});
  CHECK(r.reward == 0.0);
  CHECK(r.observation == Vec{1.0, 0.0, 0.0});

  // reward from the pre-step state; torque clipped to 2
  EnvState s{{1.0, 2.0}, 0};
  StepResult r2 = env.step(s, Vec{10.0});
  CHECK(r2.reward == doctest::Approx(-(1.0 + 0.1 * 4.0 + 0.001 * 4.0)));
  const double w = 2.0 + (15.0 * std::sin(1.0) + 3.0 * 2.0) * 0.05;
  CHECK(r2.state.physical[1] == doctest::Approx(w));
  CHECK(r2.state.physical[0] == doctest::Approx(1.0 + w * 0.05));

  // speed limit
  EnvState fast{{1.5, 7.9}, 0};
  CHECK(env.step(fast, Vec{2.0}).state.physical[1] == 8.0);

  // horizon only
  EnvState late{{0.0, 0.0}, 511};
  CHECK(env.step(late, Vec{0.0}).done);
}

TEST_CASE("angle wrapping") {
  const double pi = std::numbers::pi;
  CHECK(Pendulum::wrap_angle(pi) == doctest::Approx(pi));
  CHECK(Pendulum::wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(Pendulum::wrap_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(Pendulum::wrap_angle(-5 * pi / 2) == doctest::Approx(-pi / 2));
  for (double t = -20.0; t < 20.0; t += 0.37) {
    const double w = Pendulum::wrap_angle(t);
    CHECK(w > -pi);
    CHECK(w <= pi);
    CHECK(std::cos(w) == doctest::Approx(std::cos(t)));
  }
}

TEST_CASE("pendulum reset angle is uniform (chi-square)") {
  Pendulum env;
  Rng rng(2024);
  const int n = 10000, bins = 20;
  std::vector<int> counts(bins, 0);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    const auto r = env.reset(rng);
    const double th = r.state.physical[0];
    REQUIRE(th > -pi);
    REQUIRE(th <= pi);
    REQUIRE(std::abs(r.state.physical[1]) <= 1.0);
    counts[std::min(bins - 1, static_cast<int>((th + pi) / (2 * pi) * bins))]++;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / bins;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 36.19);  // chi-square critical value, 19 dof, p = 0.01
}

TEST_CASE("clones are independent and count their own steps") {
  auto env = make_env("pendulum");
  auto copy = env->clone();
  EnvState s{{0.5, 0.0}, 0};
  env->step(s, Vec{0.0});
  env->step(s, Vec{0.0});
  copy->step(s, Vec{0.0});
  CHECK(env->step_calls() == 2);
  CHECK(copy->step_calls() == 1);
}
