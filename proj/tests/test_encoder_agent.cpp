#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "semcast/encoder.hpp"
#include "semcast/error.hpp"
#include "semcast/toy_world.hpp"
#include "test_util.hpp"

using namespace semcast;
using semcast::testing::first_mismatch;
using semcast::testing::random_matrix;
using semcast::testing::rel_close;

namespace {

// Product of univariate normal densities, logged at the end.
double density_oracle(std::span<const double> a, std::span<const double> mu, std::span<const double> sigma) {
  long double p = 1.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double z = (a[i] - mu[i]) / sigma[i];
    p *= std::exp(-0.5L * z * z) / (sigma[i] * std::sqrt(2.0L * std::numbers::pi_v<long double>));
  }
  return static_cast<double>(std::log(p));
}

long fd_mismatch(const GradVector& analytic, const std::function<double(const ParamVector&)>& f,
                 const ParamVector& at, double rel) {
  const auto fd = finite_diff_grad(f, at, 1e-6);
  return first_mismatch(analytic.values(), fd.values(), rel, 1e-8);
}

const std::vector<double> kW{0.3, 0.7};

}  // namespace

TEST_CASE("encode: deterministic, 128-dim state by default, zero params give zero state") {
  const auto spec = EncoderSpec::make(784, 128);
  CHECK(spec.latent() == 128);
  std::mt19937_64 rng(1);
  const Matrix m = random_matrix(4, 784, rng, 0, 1);
  const auto theta = glorot_init(spec.net, 3);
  const Matrix s = encode(spec, theta, m);
  CHECK(s.cols() == 128);
  CHECK(s == encode(spec, theta, m));
  for (double v : encode(spec, ParamVector(spec.net.layout()), m).storage()) CHECK(v == 0.0);
  CHECK_THROWS_AS(encode(spec, theta, Matrix(2, 100)), DimensionError);
}

TEST_CASE("sample_action: zero noise at the sigma floor returns mu") {
  const auto w = make_toy_world(1);
  ParamVector theta = w.theta;
  // push every raw log-sigma below the clamp through the head bias
  const std::size_t head = w.agent.encoder.net.depth() - 1;
  for (std::size_t i = w.agent.encoder.bits; i < 2 * w.agent.encoder.bits; ++i) theta.bias(head)[i] = -50.0;
  const auto h = policy_forward(w.agent.encoder, theta, slice_batch(w.data, 0, 5).images, w.agent.policy);
  for (double v : h.log_sigma.storage()) CHECK(v == -5.0);
  const auto s = sample_action(h, Matrix(5, w.agent.encoder.bits));
  CHECK(s.action == h.mu);
  CHECK(s.action.cols() == h.mu.cols());
}

TEST_CASE("sample_action: log_prob matches the density oracle") {
  const auto w = make_toy_world(2);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto theta = perturb(w.theta, 0.3, rng);
    const auto h = policy_forward(w.agent.encoder, theta, sample_batch(w.data, 6, rng).images, w.agent.policy);
    const auto s = sample_action(h, rng);
    CHECK(s.action.cols() == w.agent.encoder.bits);
    for (std::size_t t = 0; t < 6; ++t)
      CHECK(std::abs(s.log_prob[t] - density_oracle(s.action.row(t), h.mu.row(t), h.sigma.row(t))) < 1e-10);
  }
}

TEST_CASE("reward") {
  CHECK(reward(std::vector<double>{0.5, 0.5}, std::vector<double>{0.8, 0.6}) == doctest::Approx(0.7));
  CHECK(reward(std::vector<double>{1, 0, 0}, std::vector<double>{0.3, 0.9, 0.1}) == 0.3);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> wv(4), ones(4, 1.0), theta(4);
    double s = 0;
    for (auto& v : wv) s += (v = std::uniform_real_distribution<double>(0, 1)(rng));
    for (auto& v : wv) v /= s;
    CHECK(reward(wv, ones) == doctest::Approx(1.0).epsilon(1e-14));
    for (auto& v : theta) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const double r = reward(wv, theta);
    CHECK((r >= 0.0 && r <= 1.0 + 1e-15));
  }
}

TEST_CASE("ppo_term clip arithmetic") {
  CHECK(ppo_term(2.0, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(ppo_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(ppo_term(1.0, 0.37, 0.2) == 0.37);
}

TEST_CASE("actor_loss at theta = theta_old: unit ratios, loss = -mean(A)") {
  const auto w = make_toy_world(3);
  Rng rng(4);
  const auto b = w.batch(w.theta, 16, rng);
  const auto ev = actor_loss(w.agent, w.theta, kW, b);
  for (double r : ev.ratio) CHECK(std::abs(r - 1.0) < 1e-12);
  const auto r = b.rewards(kW);
  double mean_a = 0;
  for (std::size_t t = 0; t < b.size(); ++t) mean_a += (r[t] - b.value[t]) / b.size();
  CHECK(ev.loss == doctest::Approx(-mean_a).epsilon(1e-12));
  CHECK(ev.loss == actor_loss(w.agent, w.theta, kW, b, RatioMode::unclipped).loss);
}

TEST_CASE("actor_loss gradient matches finite differences (20 instances, rel 1e-4)") {
  for (int inst = 0; inst < 20; ++inst) {
    const auto w = make_toy_world(200 + inst);
    Rng rng(inst);
    const auto b = w.batch(w.theta, 8, rng);
    const auto theta = perturb(w.theta, 0.05, rng);
    for (auto mode : {RatioMode::clipped, RatioMode::unclipped}) {
      const auto ev = actor_loss(w.agent, theta, kW, b, mode, true);
      auto f = [&](const ParamVector& p) { return actor_loss(w.agent, p, kW, b, mode, false).loss; };
      INFO("instance " << inst);
      CHECK(fd_mismatch(ev.grad_theta, f, theta, 1e-4) == -1);
    }
  }
}

TEST_CASE("actor_loss raises on a non-finite ratio with the sample index") {
  const auto w = make_toy_world(4);
  Rng rng(1);
  auto b = w.batch(w.theta, 5, rng);
  b.log_prob_old[2] = -1e308;
  try {
    actor_loss(w.agent, w.theta, kW, b);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.step() == 2);
  }
}

TEST_CASE("value_loss") {
  const auto w = make_toy_world(5);
  Rng rng(2);
  const auto b = w.batch(w.theta, 10, rng);
  CHECK(value_loss(w.agent.critic, w.chi, b.state, b.value).value == 0.0);
  const ParamVector zero(w.agent.critic.layout());
  CHECK(value_loss(w.agent.critic, zero, b.state, std::vector<double>(10, 1.0)).value == 1.0);

  for (int inst = 0; inst < 20; ++inst) {
    Rng r(inst);
    const auto chi = perturb(w.chi, 0.5, r);
    const auto bb = w.batch(w.theta, 8, r);
    const auto rewards = bb.rewards(kW);
    const auto vl = value_loss(w.agent.critic, chi, bb.state, rewards);
    auto f = [&](const ParamVector& p) { return value_loss(w.agent.critic, p, bb.state, rewards).value; };
    CHECK(fd_mismatch(vl.grad, f, chi, 1e-4) == -1);
  }
}

TEST_CASE("tx_loss: aux off reduces to actor_loss, w = e1 selects L_RX_1") {
  const auto w = make_toy_world(6);
  Rng rng(3);
  const auto b = w.batch(w.theta, 12, rng);
  const auto views = w.views();
  Agent off = w.agent;
  off.policy.aux = false;
  const auto theta = perturb(w.theta, 0.02, rng);
  const auto a = tx_loss(off, theta, kW, views, b, RatioMode::clipped, true);
  const auto c = actor_loss(w.agent, theta, kW, b);
  CHECK(a.loss == c.loss);
  CHECK(a.grad_theta == c.grad_theta);

  const std::vector<double> e1{1.0, 0.0};
  const auto on = tx_loss(w.agent, theta, e1, views, b, RatioMode::clipped, false);
  CHECK(on.loss - on.actor == doctest::Approx(on.rx_loss[0]).epsilon(1e-12));

  // at theta_old the surrogate path reproduces the recorded decoder losses
  const auto at_old = tx_loss(w.agent, w.theta, kW, views, b, RatioMode::clipped, false);
  for (std::size_t n = 0; n < 2; ++n) CHECK(at_old.rx_loss[n] == b.rx_loss[n]);
}

TEST_CASE("tx_loss gradients match frozen-noise finite differences (20 instances, rel 1e-4)") {
  for (int inst = 0; inst < 20; ++inst) {
    const auto w = make_toy_world(300 + inst);
    Rng rng(inst);
    const auto b = w.batch(w.theta, 8, rng);
    const auto views = w.views();
    const auto theta = perturb(w.theta, 0.05, rng);
    const auto ev = tx_loss(w.agent, theta, kW, views, b, RatioMode::clipped, true);
    auto f = [&](const ParamVector& p) { return tx_loss(w.agent, p, kW, views, b, RatioMode::clipped, false).loss; };
    INFO("instance " << inst);
    CHECK(fd_mismatch(ev.grad_theta, f, theta, 1e-4) == -1);

    for (std::size_t n = 0; n < 2; ++n) {
      auto wp = kW, wm = kW;
      wp[n] += 1e-6;
      wm[n] -= 1e-6;
      const double fd = (tx_loss(w.agent, theta, wp, views, b, RatioMode::clipped, false).loss -
                         tx_loss(w.agent, theta, wm, views, b, RatioMode::clipped, false).loss) / 2e-6;
      CHECK(rel_close(ev.grad_w[n], fd, 1e-4, 1e-8));
    }
  }
}

TEST_CASE("inner_descent") {
  // L = theta^2
  const ParamVector one({{1, 1, false}}, {1.0});
  InnerObjective quad = [](const ParamVector& p, std::size_t) {
    GradVector g(p.layout(), {2.0 * p[0]});
    return InnerStep{p[0] * p[0], g};
  };
  CHECK(inner_descent(one, quad, 1, 0.1).theta[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(inner_descent(one, quad, 5, 0.0).theta == one);
  const auto res = inner_descent(one, quad, 3, 0.1);
  CHECK(one[0] == 1.0);
  CHECK(res.losses.size() == 3);

  InnerObjective blowup = [](const ParamVector& p, std::size_t) {
    GradVector g(p.layout(), {-2.0 * p[0]});
    return InnerStep{p[0] * p[0], g};
  };
  CHECK_THROWS_AS(inner_descent(one, blowup, 10, 1.0), DivergenceError);
  CHECK_THROWS_AS(inner_descent(one, quad, 0, 0.1), Error);
}

TEST_CASE("inner_descent: aux off with zero advantages leaves theta unchanged") {
  const auto w = make_toy_world(7);
  Agent off = w.agent;
  off.policy.aux = false;
  const auto views = w.views();
  InnerObjective obj = [&](const ParamVector& p, std::size_t h) {
    Rng rng(h);
    auto b = w.batch(w.theta, 8, rng);
    b.value = b.rewards(kW);
    const auto ev = tx_loss(off, p, kW, views, b, RatioMode::clipped, true);
    return InnerStep{ev.loss, ev.grad_theta};
  };
  CHECK(inner_descent(w.theta, obj, 5, 0.1).theta == w.theta);
}
