#include "semcast/synth_benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "semcast/error.hpp"
#include "semcast/rng.hpp"

namespace semcast {

namespace {

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) y[i] += m(i, j) * x[j];
  return y;
}

std::vector<double> matvec_t(const Matrix& m, const std::vector<double>& x) {
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += m(i, j) * x[i];
  return y;
}

double quad_form(const Matrix& m, const std::vector<double>& x) {
  const auto mx = matvec(m, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * mx[i];
  return s;
}

// lo * I + B^T B * (hi - lo) / (4 n), B standard normal.
Matrix random_spd(std::size_t n, double lo, double hi, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix b(n, n), m(n, n);
  for (auto& v : b.storage()) v = normal(rng);
  const double scale = (hi - lo) / (4.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(k, i) * b(k, j);
      m(i, j) = scale * s + (i == j ? lo : 0.0);
    }
  return m;
}

}  // namespace

std::vector<double> SynthProblem::theta_star(const std::vector<double>& w) const {
  auto t = matvec(a, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += c[i];
  return t;
}

double SynthProblem::inner(const std::vector<double>& w, const std::vector<double>& theta) const {
  auto r_vec = theta_star(w);
  for (std::size_t i = 0; i < r_vec.size(); ++i) r_vec[i] = theta[i] - r_vec[i];
  return 0.5 * quad_form(q, r_vec);
}

JointVector SynthProblem::inner_grad(const std::vector<double>& w, const std::vector<double>& theta) const {
  auto r_vec = theta_star(w);
  for (std::size_t i = 0; i < r_vec.size(); ++i) r_vec[i] = theta[i] - r_vec[i];
  JointVector g;
  g.theta = matvec(q, r_vec);
  g.w = matvec_t(a, g.theta);
  for (auto& v : g.w) v = -v;
  return g;
}

double SynthProblem::upper(const std::vector<double>& w, const std::vector<double>& theta) const {
  std::vector<double> dt(theta.size()), dw(w.size());
  for (std::size_t i = 0; i < dt.size(); ++i) dt[i] = theta[i] - theta_target[i];
  for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = w[i] - w_target[i];
  return 0.5 * quad_form(r, dt) + 0.5 * quad_form(s, dw);
}

JointVector SynthProblem::upper_grad(const std::vector<double>& w, const std::vector<double>& theta) const {
  std::vector<double> dt(theta.size()), dw(w.size());
  for (std::size_t i = 0; i < dt.size(); ++i) dt[i] = theta[i] - theta_target[i];
  for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = w[i] - w_target[i];
  return {matvec(s, dw), matvec(r, dt)};
}

SynthProblem synth_trilevel_benchmark(std::size_t n_w, std::size_t n_theta, std::uint64_t seed) {
  if (n_w < 1 || n_w > 10 || n_theta < 1 || n_theta > 10)
    throw DimensionError("synthetic benchmark dimensions must lie in 1..10");
  Rng rng = derive_stream(seed, {tag(StreamPurpose::init), 7});
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(0.5, 1.5);
  SynthProblem p;
  p.a = Matrix(n_theta, n_w);
  for (auto& v : p.a.storage()) v = normal(rng);
  p.c.resize(n_theta);
  for (auto& v : p.c) v = normal(rng);
  p.q = random_spd(n_theta, 2.0, 4.0, rng);
  p.r = random_spd(n_theta, 1.0, 2.0, rng);
  p.s = random_spd(n_w, 1.0, 2.0, rng);
  p.w_target.resize(n_w);
  double total = 0.0;
  for (auto& v : p.w_target) total += (v = u(rng));
  for (auto& v : p.w_target) v /= total;
  p.theta_target = p.theta_star(p.w_target);
  return p;
}

DescentDirection synth_direction(const SynthProblem& p, const SynthConfig& cfg, const std::vector<double>& w,
                                 const std::vector<double>& theta, double* g_tilde_out) {
  std::vector<double> inner = theta;
  for (std::size_t h = 0; h < cfg.inner_steps; ++h) {
    const auto g = p.inner_grad(w, inner);
    for (std::size_t i = 0; i < inner.size(); ++i) inner[i] -= cfg.inner_lr * g.theta[i];
  }
  if (g_tilde_out) *g_tilde_out = p.inner(w, theta) - p.inner(w, inner);
  JointVector grad_g = p.inner_grad(w, theta);
  const JointVector at_inner = p.inner_grad(w, inner);
  for (std::size_t n = 0; n < grad_g.w.size(); ++n) grad_g.w[n] -= at_inner.w[n];
  return lambda_and_direction(p.upper_grad(w, theta), std::move(grad_g), cfg.beta, cfg.fallback_threshold);
}

std::vector<SynthRow> run_synth_trilevel(const SynthProblem& p, const SynthConfig& cfg, std::uint64_t seed) {
  Rng rng = derive_stream(seed, {tag(StreamPurpose::init), 8});
  std::normal_distribution<double> normal;
  JointVariable v{std::vector<double>(p.n_w(), 1.0 / static_cast<double>(p.n_w())), ParamVector({{static_cast<std::uint32_t>(p.n_theta()), 1, false}})};
  const auto start = p.theta_star(v.w);
  for (std::size_t i = 0; i < p.n_theta(); ++i) v.theta[i] = start[i] + normal(rng);

  std::vector<SynthRow> rows;
  rows.reserve(cfg.iterations);
  for (std::size_t l = 0; l < cfg.iterations; ++l) {
    const std::vector<double> theta(v.theta.values().begin(), v.theta.values().end());
    double gt = 0.0;
    const auto dd = synth_direction(p, cfg, v.w, theta, &gt);
    const auto rec = kkt_report(dd, gt);
    rows.push_back({l, p.upper(v.w, theta), gt, p.inner(v.w, theta), dd.psi, dd.lambda, dd.rho, rec.g_dot_d,
                    dd.fallback, v.w});
    v = apply_direction(v, dd.d, cfg.eta);
  }
  return rows;
}

double min_psi(const std::vector<SynthRow>& rows, std::size_t l) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : rows)
    if (r.iter < l) m = std::min(m, r.psi);
  return m;
}

void write_synth_csv(std::ostream& out, const std::vector<SynthRow>& rows) {
  const std::size_t n = rows.empty() ? 0 : rows.front().w.size();
  out << "iter,F,g_tilde,g,psi,lambda,rho,g_dot_d,fallback";
  for (std::size_t i = 1; i <= n; ++i) out << ",w_" << i;
  out << '\n';
  out.precision(17);
  for (const auto& r : rows) {
    out << r.iter << ',' << r.f << ',' << r.g_tilde << ',' << r.g_true << ',' << r.psi << ',' << r.lambda << ','
        << r.rho << ',' << r.g_dot_d << ',' << (r.fallback ? 1 : 0);
    for (double w : r.w) out << ',' << w;
    out << '\n';
  }
}

}  // namespace semcast
