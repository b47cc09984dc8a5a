#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpo/mutate.hpp"
#include "test_util.hpp"

using namespace gpo;
using namespace gpo::testing;

namespace {

GaussianPolicy nav_policy(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const int hidden[] = {16, 16};
  return GaussianPolicy::create(4, 2, hidden, rng);
}

std::shared_ptr<const Batch> rollouts(const GaussianPolicy& pi, std::uint64_t seed, std::int64_t n = 120) {
  auto env = make_env("pointnav", 40);
  Rng rng = make_rng(seed);
  return std::make_shared<Batch>(collect(pi, *env, n, 40, rng, n));
}

UpdateBatch with_advantages(std::shared_ptr<const Batch> b, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return UpdateBatch{b, random_vec(b->transitions, rng, -2, 2)};
}

GaussianPolicy perturbed(GaussianPolicy pi, std::uint64_t seed, double scale = 0.05) {
  Rng rng = make_rng(seed);
  Vec flat = pi.flatten();
  for (double& v : flat) v += uniform(rng, -scale, scale);
  pi.unflatten(flat);
  return pi;
}

GaussianPolicy constant_policy(double m0, double m1) {
  GaussianPolicy p;
  p.mean_net = Mlp({4, 2});
  p.mean_net.params()[8] = m0;
  p.mean_net.params()[9] = m1;
  p.log_std = {0.0, 0.0};
  return p;
}

Batch concatenate(const Batch& a, const Batch& b) {
  Batch c = a;
  c.trajectories.insert(c.trajectories.end(), b.trajectories.begin(), b.trajectories.end());
  c.transitions += b.transitions;
  return c;
}

double max_abs_diff(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Population make_population(int m, std::uint64_t seed) {
  Population pop;
  for (int i = 0; i < m; ++i) {
    Member mb;
    mb.id = i;
    mb.policy = nav_policy(seed * 100 + i);
    pop.members.push_back(std::move(mb));
  }
  return pop;
}

}  // namespace

TEST_CASE("ratios are one at the behavior policy") {
  const auto pi = nav_policy(1);
  const UpdateBatch ub = with_advantages(rollouts(pi, 2), 3);
  CHECK(mean_kl_from_behavior(pi, *ub.batch) == 0.0);
  double mean_adv = 0.0;
  for (double a : ub.advantages) mean_adv += a;
  mean_adv /= ub.advantages.size();
  const UpdateBatch list[] = {ub};
  CHECK(surrogate_objective(pi, list, 1.0) == doctest::Approx(mean_adv).epsilon(1e-12));
}

TEST_CASE("zero advantages, zero beta: no gradient, no change") {
  const auto pi = nav_policy(4);
  auto b = rollouts(pi, 5);
  const UpdateBatch list[] = {UpdateBatch{b, Vec(b->transitions, 0.0)}};
  for (double g : surrogate_gradient(perturbed(pi, 6), list, 0.0)) CHECK(g == 0.0);
  AdamState adam = AdamState::for_size(pi.param_count(), 3e-4);
  PpoState st;
  st.beta = 0.0;
  st.beta_min = 0.0;
  PpoResult res = ppo_update(pi, list, st, adam, 5);
  CHECK(res.policy == pi);
  AdamState adam2 = AdamState::for_size(pi.param_count(), 3e-4);
  CHECK(a2c_update(pi, list, adam2) == pi);
}

TEST_CASE("surrogate gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto own = nav_policy(10 + seed);
    const auto other = perturbed(own, 20 + seed, 0.2);
    const UpdateBatch list[] = {with_advantages(rollouts(own, 30 + seed, 40), 40 + seed),
                                with_advantages(rollouts(other, 50 + seed, 30), 60 + seed)};
    const auto at = perturbed(own, 70 + seed);
    for (double beta : {0.0, 0.7}) {
      const Vec g = surrogate_gradient(at, list, beta);
      const Vec fd = numeric_gradient(
          [&](std::span<const double> p) {
            GaussianPolicy q = at;
            q.unflatten(p);
            return surrogate_objective(q, list, beta);
          },
          at.flatten());
      CHECK(max_relative_error(g, fd) < 1e-4);
    }
  }
}

TEST_CASE("own batch at the behavior policy reduces to the score function") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pi = nav_policy(80 + seed);
    const UpdateBatch ub = with_advantages(rollouts(pi, 90 + seed), 100 + seed);
    const UpdateBatch list[] = {ub};
    CHECK(max_abs_diff(surrogate_gradient(pi, list, 0.0), score_function_gradient(pi, ub)) < 1e-10);
  }
}

TEST_CASE("sharing between identical policies equals one concatenated batch") {
  const auto pi = nav_policy(110);
  auto b1 = rollouts(pi, 111, 100);
  auto b2 = rollouts(pi, 112, 70);
  const UpdateBatch u1 = with_advantages(b1, 113), u2 = with_advantages(b2, 114);
  Vec adv = u1.advantages;
  adv.insert(adv.end(), u2.advantages.begin(), u2.advantages.end());
  const UpdateBatch both[] = {u1, u2};
  const UpdateBatch joined[] = {UpdateBatch{std::make_shared<Batch>(concatenate(*b1, *b2)), adv}};
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto at = s == 0 ? pi : perturbed(pi, 115 + s);
    CHECK(max_abs_diff(surrogate_gradient(at, both, 0.0), surrogate_gradient(at, joined, 0.0)) < 1e-10);
  }
}

TEST_CASE("update errors") {
  const auto pi = nav_policy(120);
  AdamState adam = AdamState::for_size(pi.param_count(), 1e-3);
  std::vector<UpdateBatch> none;
  CHECK_THROWS_AS(ppo_update(pi, none, PpoState{}, adam, 1), std::invalid_argument);
  CHECK_THROWS_AS(a2c_update(pi, none, adam), std::invalid_argument);
  auto b = rollouts(pi, 121);
  const UpdateBatch bad[] = {UpdateBatch{b, Vec(b->transitions, std::nan(""))}};
  CHECK_THROWS_AS(ppo_update(pi, bad, PpoState{}, adam, 1), NumericalError);
  const UpdateBatch short_adv[] = {UpdateBatch{b, Vec(3, 0.0)}};
  CHECK_THROWS_AS(a2c_update(pi, short_adv, adam), ShapeError);
}

TEST_CASE("adaptive beta") {
  PpoState s;
  s.adapt(1.0);
  CHECK(s.beta == 2.0);
  s.adapt(0.0);
  CHECK(s.beta == 1.0);
  s.adapt(0.01);
  CHECK(s.beta == 1.0);
  Rng rng = make_rng(130);
  for (int i = 0; i < 1000; ++i) {
    s.adapt(uniform(rng, 0, 1) < 0.5 ? 0.0 : 100.0);
    CHECK(s.beta >= s.beta_min);
    CHECK(s.beta <= s.beta_max);
  }
  for (int i = 0; i < 100; ++i) s.adapt(1e9);
  CHECK(s.beta == s.beta_max);
}

TEST_CASE("similarity sets") {
  const auto pi = nav_policy(140);
  std::vector<GaussianPolicy> same(3, pi);
  std::vector<std::shared_ptr<const Batch>> probes{rollouts(pi, 141), rollouts(pi, 142), rollouts(pi, 143)};
  auto s = similarity_sets(same, probes, 0.05);
  for (int i = 0; i < 3; ++i) CHECK(s.sets[i] == std::vector<int>{0, 1, 2});

  std::vector<GaussianPolicy> diff{nav_policy(144), nav_policy(145), nav_policy(146)};
  s = similarity_sets(diff, probes, 0.0);
  for (int i = 0; i < 3; ++i) CHECK(s.sets[i] == std::vector<int>{i});

  // constant means 0 and 0.3 per dim, unit std: KL = 2 * 0.3^2 / 2 = 0.09
  std::vector<GaussianPolicy> two{constant_policy(0, 0), constant_policy(0.3, 0.3)};
  std::vector<std::shared_ptr<const Batch>> p2{rollouts(two[0], 147), rollouts(two[1], 148)};
  s = similarity_sets(two, p2, 0.1);
  CHECK(s.kl[0][1] == doctest::Approx(0.09));
  CHECK(s.sets[0] == std::vector<int>{0, 1});
  s = similarity_sets(two, p2, 0.08);
  CHECK(s.sets[0] == std::vector<int>{0});
  CHECK(s.sets[1] == std::vector<int>{1});

  p2[1] = nullptr;
  CHECK_THROWS_AS(similarity_sets(two, p2, 0.1), std::invalid_argument);
  p2.pop_back();
  CHECK_THROWS_AS(similarity_sets(two, p2, 0.1), std::invalid_argument);
}

TEST_CASE("population of one: sharing is a no-op") {
  auto env = make_env("pointnav", 64);
  MutationConfig cfg;
  cfg.batch_size = 256;
  cfg.horizon = 64;
  Population a = make_population(1, 7), b = make_population(1, 7);
  cfg.share = true;
  mutate_population(a, *env, cfg, 768, 9, 0);
  cfg.share = false;
  mutate_population(b, *env, cfg, 768, 9, 0);
  CHECK(a.members[0].policy == b.members[0].policy);
}

TEST_CASE("mutation is deterministic and spends the exact budget") {
  auto env = make_env("pointnav", 64);
  MutationConfig cfg;
  cfg.batch_size = 300;
  cfg.horizon = 64;
  cfg.epsilon = 1e9;  // share everything
  Population a = make_population(3, 8), b = make_population(3, 8);
  const auto ra = mutate_population(a, *env, cfg, 1000, 11, 2);
  const auto rb = mutate_population(b, *env, cfg, 1000, 11, 2);
  for (int i = 0; i < 3; ++i) CHECK(a.members[i].policy == b.members[i].policy);
  CHECK(ra.transitions == 3000);
  CHECK(ra.iterations == 4);
  CHECK(ra.records.size() == 12);
  CHECK(ra.records.back().transitions == 100);
  CHECK(ra.records.front().shared_with_count == 2);
  for (int i = 0; i < 3; ++i) CHECK(a.members[i].last_batch->transitions == 100);
  CHECK(env->step_calls() == 0);  // the prototype is cloned, never stepped
}

TEST_CASE("mutation improves the return") {
  auto env = make_env("pointnav");
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Population pop = make_population(1, seed);
    MutationConfig cfg;
    const auto rep = mutate_population(pop, *env, cfg, 20 * cfg.batch_size, seed, 0);
    REQUIRE(rep.iterations == 20);
    const double first = rep.records.front().mean_return;
    const double last = rep.records.back().mean_return;
    MESSAGE("seed " << seed << ": " << first << " -> " << last);
    if (last > first) ++improved;
  }
  CHECK(improved >= 4);
}
