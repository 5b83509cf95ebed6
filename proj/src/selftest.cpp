#include "semcast/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "semcast/error.hpp"
#include "semcast/toy_world.hpp"
#include "semcast/trilevel.hpp"

namespace semcast {

namespace {

// Worst |a - b| / (max(|a|, |b|) + floor) over all coordinates.
double worst_rel(std::span<const double> a, std::span<const double> b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / (std::max(std::abs(a[i]), std::abs(b[i])) + floor));
  return worst;
}

struct Tally {
  SuiteResult r;
  double tol;
  void add(double err) {
    ++r.total;
    r.worst = std::max(r.worst, err);
    if (err <= tol) ++r.passed;
  }
};

constexpr double kFdStep = 1e-6;
constexpr double kFdFloor = 1e-7;

NetworkSpec random_net(Rng& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 7);
  std::uniform_int_distribution<int> depth(1, 3), act(0, 3);
  const Activation acts[] = {Activation::linear, Activation::relu, Activation::sigmoid, Activation::tanh};
  std::vector<LayerSpec> layers;
  std::size_t in = dim(rng);
  const int d = depth(rng);
  for (int l = 0; l < d; ++l) {
    const std::size_t out = dim(rng);
    const bool last_softmax = l + 1 == d && out > 1 && rng() % 4 == 0;
    layers.push_back({in, out, last_softmax ? Activation::softmax : acts[act(rng)]});
    in = out;
  }
  return NetworkSpec(std::move(layers));
}

Matrix random_fill(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> n;
  for (auto& v : m.storage()) v = n(rng);
  return m;
}

}  // namespace

std::vector<SuiteResult> run_gradcheck(std::uint64_t seed, std::size_t instances) {
  std::vector<SuiteResult> out;
  const std::vector<double> w{0.35, 0.65};

  {
    Tally t{{"net-core backward (params + input)", 0, 0, 0, "rel 1e-5"}, 1e-5};
    for (std::size_t i = 0; i < instances; ++i) {
      Rng rng = derive_stream(seed, {11, i});
      const auto spec = random_net(rng);
      const auto params = glorot_init(spec, rng());
      const Matrix x = random_fill(3, spec.input_dim(), rng);
      const Matrix c = random_fill(3, spec.output_dim(), rng);
      auto loss = [&](const ParamVector& p, const Matrix& in) {
        const auto y = forward(spec, p, in).output();
        double s = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) s += c.data()[k] * y.data()[k];
        return s;
      };
      const auto cache = forward(spec, params, x);
      const auto g = backward(spec, params, cache, c, true);
      const auto fd = finite_diff_grad([&](const ParamVector& p) { return loss(p, x); }, params, kFdStep);
      std::vector<double> fd_in(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) {
        Matrix xp = x, xm = x;
        xp.data()[k] += kFdStep;
        xm.data()[k] -= kFdStep;
        fd_in[k] = (loss(params, xp) - loss(params, xm)) / (2 * kFdStep);
      }
      t.add(std::max(worst_rel(g.grad.values(), fd.values(), kFdFloor),
                     worst_rel(g.input_grad.storage(), fd_in, kFdFloor)));
    }
    out.push_back(t.r);
  }

  Tally actor{{"actor loss (clipped, frozen draws)", 0, 0, 0, "rel 1e-4"}, 1e-4};
  Tally tx{{"TX loss surrogate path (theta and w)", 0, 0, 0, "rel 1e-4"}, 1e-4};
  Tally value{{"value loss", 0, 0, 0, "rel 1e-4"}, 1e-4};
  Tally joint{{"grad_F and grad_g_tilde over (w, theta)", 0, 0, 0, "rel 1e-4"}, 1e-4};
  for (std::size_t i = 0; i < instances; ++i) {
    const auto world = make_toy_world(derive_seed(seed, {12, i}));
    const auto views = world.views();
    Rng rng = derive_stream(seed, {13, i});
    const auto batch = world.batch(world.theta, 8, rng);
    const auto theta = perturb(world.theta, 0.05, rng);

    {
      const auto ev = actor_loss(world.agent, theta, w, batch, RatioMode::clipped, true);
      const auto fd = finite_diff_grad(
          [&](const ParamVector& p) { return actor_loss(world.agent, p, w, batch, RatioMode::clipped, false).loss; },
          theta, kFdStep);
      actor.add(worst_rel(ev.grad_theta.values(), fd.values(), kFdFloor));
    }
    {
      auto f = [&](const ParamVector& p, std::span<const double> wv) {
        return tx_loss(world.agent, p, wv, views, batch, RatioMode::clipped, false).loss;
      };
      const auto ev = tx_loss(world.agent, theta, w, views, batch, RatioMode::clipped, true);
      const auto fd = finite_diff_grad([&](const ParamVector& p) { return f(p, w); }, theta, kFdStep);
      std::vector<double> fd_w(w.size());
      for (std::size_t n = 0; n < w.size(); ++n) {
        auto wp = w, wm = w;
        wp[n] += kFdStep;
        wm[n] -= kFdStep;
        fd_w[n] = (f(theta, wp) - f(theta, wm)) / (2 * kFdStep);
      }
      tx.add(std::max(worst_rel(ev.grad_theta.values(), fd.values(), kFdFloor),
                      worst_rel(ev.grad_w, fd_w, kFdFloor)));
    }
    {
      const auto chi = perturb(world.chi, 0.3, rng);
      const auto r = batch.rewards(w);
      const auto vl = value_loss(world.agent.critic, chi, batch.state, r);
      const auto fd = finite_diff_grad(
          [&](const ParamVector& p) { return value_loss(world.agent.critic, p, batch.state, r).value; }, chi, kFdStep);
      value.add(worst_rel(vl.grad.values(), fd.values(), kFdFloor));
    }
    {
      // F = L_TX with plain ratios; g_tilde over w with theta_inner frozen.
      const auto inner = perturb(theta, 0.05, rng);
      const auto tg = trilevel_gradients(world.agent, theta, inner, w, views, batch);
      auto F = [&](const ParamVector& p, std::span<const double> wv) {
        return tx_loss(world.agent, p, wv, views, batch, RatioMode::unclipped, false).loss;
      };
      auto G = [&](std::span<const double> wv) {
        return tx_loss(world.agent, theta, wv, views, batch, RatioMode::unclipped, false).loss -
               tx_loss(world.agent, inner, wv, views, batch, RatioMode::clipped, false).loss;
      };
      const auto fd_theta = finite_diff_grad([&](const ParamVector& p) { return F(p, w); }, theta, kFdStep);
      std::vector<double> fd_fw(w.size()), fd_gw(w.size());
      for (std::size_t n = 0; n < w.size(); ++n) {
        auto wp = w, wm = w;
        wp[n] += kFdStep;
        wm[n] -= kFdStep;
        fd_fw[n] = (F(theta, wp) - F(theta, wm)) / (2 * kFdStep);
        fd_gw[n] = (G(wp) - G(wm)) / (2 * kFdStep);
      }
      joint.add(std::max({worst_rel(tg.grad_f.theta, fd_theta.values(), kFdFloor),
                          worst_rel(tg.grad_f.w, fd_fw, kFdFloor), worst_rel(tg.grad_g.w, fd_gw, kFdFloor)}));
    }
  }
  out.push_back(actor.r);
  out.push_back(tx.r);
  out.push_back(value.r);
  out.push_back(joint.r);
  return out;
}

double dual_search_lambda(const std::vector<double>& f, const std::vector<double>& g, double rho) {
  // D(lambda) = lambda rho - |f + lambda g|^2 / 2 (value of the inner minimization over d)
  auto dual = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] + lambda * g[i]) * (f[i] + lambda * g[i]);
    return lambda * rho - 0.5 * s;
  };
  double hi = 1.0;
  while (dual(hi * 1.0001) > dual(hi) && hi < 1e12) hi *= 2.0;
  const std::size_t cells = 100000;
  const double step = hi / cells;
  std::size_t best = 0;
  double best_val = dual(0.0);
  for (std::size_t k = 1; k <= cells; ++k) {
    const double v = dual(k * step);
    if (v > best_val) best_val = v, best = k;
  }
  double a = std::max(0.0, (static_cast<double>(best) - 1.0) * step), b = (best + 1.0) * step;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (dual(c) >= dual(d)) b = d;
    else a = c;
  }
  return 0.5 * (a + b);
}

SuiteResult run_qp_oracle(std::uint64_t seed, std::size_t instances) {
  Tally t{{"QP direction vs brute-force dual search", 0, 0, 0, "L2 distance <= 1e-3"}, 1e-3};
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng = derive_stream(seed, {21, i});
    std::uniform_int_distribution<std::size_t> nw(1, 4), nt(1, 6);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    JointVector f{std::vector<double>(nw(rng)), {}}, g;
    f.theta.resize(nt(rng));
    for (auto& v : f.w) v = n(rng);
    for (auto& v : f.theta) v = n(rng);
    g = f;
    for (auto& v : g.w) v = n(rng);
    for (auto& v : g.theta) v = n(rng);
    const double beta = u(rng);

    const auto dd = lambda_and_direction(f, g, beta);
    std::vector<double> ff(f.w), gf(g.w);
    ff.insert(ff.end(), f.theta.begin(), f.theta.end());
    gf.insert(gf.end(), g.theta.begin(), g.theta.end());
    double rho = 0.0;
    for (double v : gf) rho += beta * v * v;
    const double lambda = dual_search_lambda(ff, gf, rho);
    double dist = 0.0;
    std::vector<double> d(dd.d.w);
    d.insert(d.end(), dd.d.theta.begin(), dd.d.theta.end());
    for (std::size_t k = 0; k < ff.size(); ++k) {
      const double oracle = -ff[k] - lambda * gf[k];
      dist += (d[k] - oracle) * (d[k] - oracle);
    }
    t.add(std::sqrt(dist));
  }
  return t.r;
}

SuiteResult run_kkt_suite(std::uint64_t seed, std::size_t instances) {
  SuiteResult r{"KKT residual assertions", 0, 0, 0, "normalized residual <= 1e-6"};
  std::size_t active = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng = derive_stream(seed, {31, i});
    std::uniform_int_distribution<std::size_t> nw(1, 10), nt(1, 200);
    std::uniform_real_distribution<double> u(0.0, 1.0), expo(-3.0, 3.0);
    std::normal_distribution<double> n;
    JointVector f{std::vector<double>(nw(rng)), std::vector<double>(nt(rng))}, g;
    const double sf = std::pow(10.0, expo(rng)), sg = std::pow(10.0, expo(rng));
    for (auto& v : f.w) v = sf * n(rng);
    for (auto& v : f.theta) v = sf * n(rng);
    g = f;
    for (auto& v : g.w) v = sg * n(rng);
    for (auto& v : g.theta) v = sg * n(rng);
    const auto dd = lambda_and_direction(f, g, u(rng));
    ++r.total;
    try {
      const auto rec = kkt_report(dd, 0.0);
      const double resid = rec.lambda > 0.0 ? std::abs(rec.g_dot_d + rec.rho) / (1.0 + rec.rho)
                                            : std::max(0.0, rec.g_dot_d + rec.rho) / (1.0 + rec.rho);
      r.worst = std::max(r.worst, resid);
      active += rec.lambda > 0.0;
      ++r.passed;
    } catch (const KktViolation&) {
    }
  }
  r.note += ", " + std::to_string(active) + " with lambda > 0";
  return r;
}

std::vector<double> simplex_grid_search(const std::vector<double>& a) {
  auto dist = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (p[i] - a[i]) * (p[i] - a[i]);
    return s;
  };
  if (a.size() == 2) {
    std::vector<double> best{0, 1};
    for (int k = 0; k <= 100000; ++k) {
      const std::vector<double> p{k * 1e-5, 1.0 - k * 1e-5};
      if (dist(p) < dist(best)) best = p;
    }
    return best;
  }
  if (a.size() != 3) throw DimensionError("grid search supports 2 or 3 coordinates");
  auto scan = [&](double lo0, double hi0, double lo1, double hi1, double step, std::vector<double> best) {
    for (double x = std::max(lo0, 0.0); x <= std::min(hi0, 1.0) + 1e-12; x += step)
      for (double y = std::max(lo1, 0.0); y <= std::min(hi1, 1.0 - x) + 1e-12; y += step) {
        const std::vector<double> p{x, y, std::max(1.0 - x - y, 0.0)};
        if (dist(p) < dist(best)) best = p;
      }
    return best;
  };
  auto best = scan(0, 1, 0, 1, 1e-2, {1, 0, 0});
  return scan(best[0] - 0.02, best[0] + 0.02, best[1] - 0.02, best[1] + 0.02, 1e-4, best);
}

SuiteResult run_simplex_oracle(std::uint64_t seed, std::size_t instances) {
  Tally t{{"simplex projection vs grid search", 0, 0, 0, "L2 distance <= 1e-3, idempotent"}, 1e-3};
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng = derive_stream(seed, {41, i});
    std::uniform_real_distribution<double> u(-1.5, 2.0);
    std::vector<double> a(2 + i % 2);
    for (auto& v : a) v = u(rng);
    const auto p = project_simplex(a);
    const auto oracle = simplex_grid_search(a);
    double dist = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dist += (p[k] - oracle[k]) * (p[k] - oracle[k]);
    const bool idempotent = project_simplex(p) == p;
    t.add(idempotent ? std::sqrt(dist) : INFINITY);
  }
  return t.r;
}

}  // namespace semcast
