#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "gpo/nn.hpp"
#include "test_util.hpp"

using namespace gpo;
using namespace gpo::testing;

TEST_CASE("mlp parameter layout") {
  const std::vector<int> sizes{4, 64, 64, 2};
  Mlp net(sizes);
  CHECK(net.param_count() == 4 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
  CHECK(Mlp::param_count(sizes) == net.param_count());
  CHECK(net.layer_offset(1) == 4 * 64 + 64);
  CHECK_THROWS_AS(Mlp(std::vector<int>{3}), ShapeError);
  CHECK_THROWS_AS(Mlp(std::vector<int>{3, 0, 1}), ShapeError);

  Rng rng(7);
  Mlp g = Mlp::glorot(sizes, rng);
  Mlp copy(sizes);
  copy.unflatten(g.flatten());
  CHECK(copy == g);
  CHECK_THROWS_AS(copy.unflatten(Vec(3)), ShapeError);
}

TEST_CASE("forward examples") {
  Mlp zero({3, 5, 2});
  const Vec out = zero.forward(Vec{1.0, -2.0, 3.0});
  CHECK(out == Vec{0.0, 0.0});

  Mlp affine({1, 1});
  affine.params()[0] = 2.0;
  affine.params()[1] = 1.0;
  CHECK(affine.forward(Vec{3.0})[0] == 7.0);

  CHECK_THROWS_AS(affine.forward(Vec{1.0, 2.0}), ShapeError);
}

TEST_CASE("forward matches a straight-line evaluator") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net = Mlp::glorot({4, 64, 64, 2}, rng);
    const Vec x = random_vec(4, rng, -3, 3);
    const Vec got = net.forward(x);
    const Vec want = reference_forward(net, x);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
  }
}

TEST_CASE("a sample's output does not depend on the batch around it") {
  Rng rng(5);
  Mlp net = Mlp::glorot({4, 64, 64, 2}, rng);
  for (int n : {1, 7, 15, 16, 17, 33, 100}) {
    const Matrix x = random_matrix(4, n, rng, -2, 2);
    const Matrix y = net.forward(x);
    for (int j = 0; j < n; ++j) {
      const Vec single = net.forward(x.column(j));
      for (int d = 0; d < 2; ++d) REQUIRE(single[d] == y(d, j));  // bit-identical
    }
  }
}

TEST_CASE("hidden activation tracks std::tanh") {
  Mlp net({1, 1, 1});
  auto p = net.params();
  p[0] = 1.0;  // w1
  p[2] = 1.0;  // w2
  double worst = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    const double x = i * 1.3e-3;
    const double t = std::tanh(x);
    const double y = net.forward(Vec{x})[0];
    worst = std::max(worst, t == 0.0 ? std::abs(y) : std::abs(y - t) / std::abs(t));
  }
  CHECK(worst < 4e-15);
  CHECK(net.forward(Vec{50.0})[0] == 1.0);
  CHECK(net.forward(Vec{-50.0})[0] == -1.0);
  CHECK(std::isnan(net.forward(Vec{std::nan("")})[0]));
}

TEST_CASE("backward examples") {
  Rng rng(3);
  Mlp net = Mlp::glorot({3, 8, 2}, rng);
  const Vec g = net.backward(Vec{0.1, 0.2, 0.3}, Vec{0.0, 0.0});
  CHECK(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));

  Mlp scalar({1, 1});
  scalar.params()[0] = 0.7;
  const Vec gs = scalar.backward(Vec{2.0}, Vec{1.0});
  CHECK(gs[1] == 1.0);  // d out / d bias
  CHECK(gs[0] == 2.0);  // d out / d w
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp net = Mlp::glorot({3, 16, 16, 2}, rng);
    const int n = 1 + trial * 4;
    const Matrix x = random_matrix(3, n, rng, -2, 2);
    const Matrix up = random_matrix(2, n, rng);
    Mlp::Tape tape;
    net.forward(x, &tape);
    const Vec analytic = net.backward(tape, up);
    auto f = [&](std::span<const double> theta) {
      Mlp m = net;
      m.unflatten(theta);
      const Matrix y = m.forward(x);
      double s = 0.0;
      for (int d = 0; d < 2; ++d)
        for (int j = 0; j < n; ++j) s += up(d, j) * y(d, j);
      return s;
    };
    CHECK(max_relative_error(analytic, numeric_gradient(f, net.flatten())) < 1e-4);
  }
}

TEST_CASE("batched backward equals the sum of per-sample gradients") {
  Rng rng(23);
  Mlp net = Mlp::glorot({4, 32, 32, 2}, rng);
  const int n = 37;
  const Matrix x = random_matrix(4, n, rng);
  const Matrix up = random_matrix(2, n, rng);
  Mlp::Tape tape;
  net.forward(x, &tape);
  const Vec batched = net.backward(tape, up);
  Vec summed(net.param_count(), 0.0);
  for (int j = 0; j < n; ++j) {
    const Vec g = net.backward(x.column(j), up.column(j));
    for (std::size_t k = 0; k < g.size(); ++k) summed[k] += g[k];
  }
  CHECK(max_relative_error(batched, summed, 1e-9) < 1e-10);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves everything unchanged") {
    AdamState s = AdamState::for_size(3, 0.1);
    Vec p{1.0, 2.0, 3.0};
    adam_step(s, p, Vec{0.0, 0.0, 0.0});
    CHECK(p == Vec{1.0, 2.0, 3.0});
    CHECK(s.m == Vec{0.0, 0.0, 0.0});
    CHECK(s.v == Vec{0.0, 0.0, 0.0});
  }
  SUBCASE("first step has magnitude lr against the gradient") {
    for (double g : {1e-3, 0.5, -7.0}) {
      AdamState s = AdamState::for_size(1, 0.01);
      Vec p{0.0};
      adam_step(s, p, Vec{g});
      CHECK(p[0] == doctest::Approx(g > 0 ? -0.01 : 0.01).epsilon(1e-4));
    }
  }
  SUBCASE("minimizes a quadratic") {
    AdamState s = AdamState::for_size(1, 0.1);
    Vec w{0.0};
    for (int i = 0; i < 100; ++i) adam_step(s, w, Vec{2.0 * (w[0] - 3.0)});
    CHECK(std::abs(w[0] - 3.0) < 0.1);
  }
  AdamState s = AdamState::for_size(2, 0.1);
  Vec p(3);
  CHECK_THROWS_AS(adam_step(s, p, Vec(3)), ShapeError);
}

TEST_CASE("gaussian closed forms") {
  const DiagGaussian std1{{0.0}, {0.0}};
  CHECK(gauss_log_prob(std1, Vec{0.0}) == doctest::Approx(-0.918939).epsilon(1e-6));
  CHECK(gauss_log_prob(std1, Vec{1.0}) == doctest::Approx(-1.418939).epsilon(1e-6));
  CHECK(gauss_entropy(std1) == doctest::Approx(1.418939).epsilon(1e-6));
  CHECK(gauss_kl(std1, DiagGaussian{{1.0}, {0.0}}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gauss_kl(std1, DiagGaussian{{0.0}, {std::log(2.0)}}) == doctest::Approx(0.318147).epsilon(1e-6));
  CHECK_THROWS_AS(gauss_log_prob(std1, Vec{1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(gauss_kl(std1, DiagGaussian{{0.0, 0.0}, {0.0, 0.0}}), ShapeError);

  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const DiagGaussian p{random_vec(3, rng, -5, 5), random_vec(3, rng, -3, 3)};
    CHECK(gauss_kl(p, p) == 0.0);  // exactly
  }
}

TEST_CASE("log-density integrates to one") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const double mu = uniform(rng, -2, 2), ls = uniform(rng, -1.5, 1.0);
    const DiagGaussian d{{mu}, {ls}};
    const double s = std::exp(ls);
    // Simpson over mu +- 12 sigma
    const int n = 4000;
    const double a = mu - 12 * s, h = 24 * s / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += w * std::exp(gauss_log_prob(d, Vec{a + i * h}));
    }
    CHECK(std::abs(sum * h / 3.0 - 1.0) < 1e-3);
  }
}

TEST_CASE("sampling") {
  Rng rng(99);
  const DiagGaussian std1{{0.0}, {0.0}};
  const int n = 100000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gauss_sample(std1, rng)[0];
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(std::sqrt(ss / n - mean * mean) - 1.0) < 0.02);

  const DiagGaussian point{{0.3, -1.7}, {-1e4, -1e4}};
  CHECK(gauss_sample(point, rng) == point.mean);
}

TEST_CASE("binary head") {
  auto p = [](double a, double b) { return binary_head(Vec{a, b}).probs; };
  CHECK(p(0, 0)[0] == 0.5);
  CHECK(p(123.4, 123.4)[1] == 0.5);
  CHECK(p(std::log(3.0), 0)[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(p(std::log(3.0), 0)[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p(1000, -1000)[0] == 1.0);
  CHECK(std::isfinite(p(-1000, 1000)[0]));
  CHECK_THROWS_AS(binary_head(Vec{1.0}), ShapeError);
}

TEST_CASE("policy gradient plumbing matches finite differences of the log-density") {
  Rng rng(31);
  const std::vector<int> hidden{16, 16};
  GaussianPolicy pi = GaussianPolicy::create(4, 2, hidden, rng);
  pi.log_std = {-0.3, 0.2};
  const Matrix obs = random_matrix(4, 9, rng);
  const Matrix act = random_matrix(2, 9, rng);
  auto total_logp = [&](const GaussianPolicy& q) {
    double s = 0.0;
    for (int j = 0; j < 9; ++j) s += gauss_log_prob(q.distribution(obs.column(j)), act.column(j));
    return s;
  };
  Mlp::Tape tape;
  const Matrix mu = pi.mean_net.forward(obs, &tape);
  Matrix d_mean(2, 9);
  Vec d_ls(2, 0.0);
  for (int j = 0; j < 9; ++j)
    for (int d = 0; d < 2; ++d) {
      const double var = std::exp(2 * pi.log_std[d]);
      const double diff = act(d, j) - mu(d, j);
      d_mean(d, j) = diff / var;
      d_ls[d] += diff * diff / var - 1.0;
    }
  const Vec analytic = pi.gradient(tape, d_mean, d_ls);
  auto f = [&](std::span<const double> theta) {
    GaussianPolicy q = pi;
    q.unflatten(theta);
    return total_logp(q);
  };
  CHECK(max_relative_error(analytic, numeric_gradient(f, pi.flatten())) < 1e-4);
}

TEST_CASE("snapshot round trip") {
  Rng rng(2);
  const std::vector<int> hidden{64, 64};
  GaussianPolicy pi = GaussianPolicy::create(4, 2, hidden, rng);
  pi.log_std = {-0.25, 0.125};
  std::stringstream buf;
  save_policy(buf, pi);
  const std::string bytes = buf.str();
  CHECK(bytes.size() == 4 + 4 * 4 + 8 * pi.param_count());
  std::stringstream in(bytes);
  CHECK(load_policy(in) == pi);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS(load_policy(truncated));
  std::stringstream garbage(std::string("\xff\xff\xff\xff", 4));
  CHECK_THROWS(load_mlp(garbage));

  std::stringstream mbuf;
  save_mlp(mbuf, pi.mean_net);
  CHECK(load_mlp(mbuf) == pi.mean_net);
}
