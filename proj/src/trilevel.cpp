#include "semcast/trilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semcast/error.hpp"

namespace semcast {

namespace {

long double dot_block(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("joint block sizes differ");
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

void list(std::ostream& os, const char* name, const std::vector<double>& v) {
  os << ' ' << name << "=[";
  const std::size_t shown = std::min<std::size_t>(v.size(), 16);
  for (std::size_t i = 0; i < shown; ++i) os << (i ? "," : "") << v[i];
  if (shown < v.size()) os << ",... (" << v.size() << " entries)";
  os << ']';
}

}  // namespace

double dot(const JointVector& a, const JointVector& b) {
  return static_cast<double>(dot_block(a.w, b.w) + dot_block(a.theta, b.theta));
}

double norm2(const JointVector& a) { return dot(a, a); }

DescentDirection lambda_and_direction(JointVector grad_f, JointVector grad_g, double beta, double fallback_threshold) {
  if (grad_f.w.size() != grad_g.w.size() || grad_f.theta.size() != grad_g.theta.size())
    throw DimensionError("grad_F and grad_g blocks differ in size");
  DescentDirection dd;
  const double gg = norm2(grad_g);
  dd.rho = beta * gg;
  dd.fallback = std::sqrt(gg) <= fallback_threshold;
  dd.lambda = dd.fallback ? 0.0 : std::max((dd.rho - dot(grad_g, grad_f)) / gg, 0.0);

  dd.d.w.resize(grad_f.w.size());
  dd.d.theta.resize(grad_f.theta.size());
  long double psi = 0.0L;
  auto fill = [&](const std::vector<double>& f, const std::vector<double>& g, std::vector<double>& d) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double s = f[i] + dd.lambda * g[i];
      d[i] = -s;
      psi += static_cast<long double>(s) * s;
    }
  };
  fill(grad_f.w, grad_g.w, dd.d.w);
  fill(grad_f.theta, grad_g.theta, dd.d.theta);
  dd.psi = static_cast<double>(psi);
  dd.grad_f = std::move(grad_f);
  dd.grad_g = std::move(grad_g);
  return dd;
}

std::vector<double> project_simplex(std::span<const double> w) {
  if (w.empty()) throw DimensionError("cannot project an empty vector");
  // points already on the simplex up to rounding are returned as-is
  double total = 0.0;
  bool nonneg = true;
  for (double v : w) {
    total += v;
    nonneg = nonneg && v >= 0.0;
  }
  if (nonneg && std::abs(total - 1.0) <= 4.0 * static_cast<double>(w.size()) * std::numeric_limits<double>::epsilon())
    return {w.begin(), w.end()};
  std::vector<double> u(w.begin(), w.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = std::max(w[i] - tau, 0.0);
  return out;
}

JointVariable apply_direction(const JointVariable& v, const JointVector& d, double eta) {
  if (d.w.size() != v.w.size() || d.theta.size() != v.theta.size())
    throw DimensionError("direction blocks do not match the joint variable");
  JointVariable out = v;
  std::vector<double> w(v.w);
  for (std::size_t n = 0; n < w.size(); ++n) w[n] += eta * d.w[n];
  out.w = project_simplex(w);
  auto theta = out.theta.values();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += eta * d.theta[i];
  return out;
}

std::string describe(const DescentDirection& dd) {
  std::ostringstream os;
  os.precision(17);
  os << "rho=" << dd.rho << " lambda=" << dd.lambda << " psi=" << dd.psi << " fallback=" << dd.fallback
     << " |grad_f|^2=" << norm2(dd.grad_f) << " |grad_g|^2=" << norm2(dd.grad_g)
     << " <grad_g,grad_f>=" << dot(dd.grad_g, dd.grad_f) << " <grad_g,d>=" << dot(dd.grad_g, dd.d);
  list(os, "grad_f.w", dd.grad_f.w);
  list(os, "grad_g.w", dd.grad_g.w);
  list(os, "d.w", dd.d.w);
  list(os, "grad_f.theta", dd.grad_f.theta);
  list(os, "grad_g.theta", dd.grad_g.theta);
  list(os, "d.theta", dd.d.theta);
  return os.str();
}

KktRecord kkt_report(const DescentDirection& dd, double g_tilde_value, double tol) {
  KktRecord rec{dd.psi, g_tilde_value, dd.lambda, dd.rho, dot(dd.grad_g, dd.d), dd.fallback};
  if (dd.fallback) return rec;
  const double slack = tol * (1.0 + dd.rho);
  const bool ok = dd.lambda > 0.0 ? std::abs(rec.g_dot_d + dd.rho) <= slack : rec.g_dot_d <= -dd.rho + slack;
  if (!ok) {
    std::ostringstream os;
    os.precision(17);
    os << "KKT check failed (" << (dd.lambda > 0.0 ? "active" : "inactive") << " constraint) g_tilde=" << g_tilde_value
       << ' ' << describe(dd);
    throw KktViolation(os.str());
  }
  return rec;
}

double g_tilde(const std::function<double(const ParamVector&)>& f, const ParamVector& theta,
               const ParamVector& theta_inner) {
  return f(theta) - f(theta_inner);
}

TrilevelGradients trilevel_gradients(const Agent& agent, const ParamVector& theta, const ParamVector& theta_inner,
                                     std::span<const double> w, std::span<const ReceiverView> receivers,
                                     const TransitionBatch& batch) {
  const auto at_theta = tx_loss(agent, theta, w, receivers, batch, RatioMode::unclipped, true);
  const auto clipped = tx_loss(agent, theta, w, receivers, batch, RatioMode::clipped, false);
  const auto at_inner = tx_loss(agent, theta_inner, w, receivers, batch, RatioMode::clipped, false);

  TrilevelGradients out;
  out.loss_tx = clipped.loss;
  out.g_tilde = clipped.loss - at_inner.loss;
  out.rx_loss = at_theta.rx_loss;
  out.grad_f.w = at_theta.grad_w;
  out.grad_f.theta = at_theta.grad_theta.storage();
  out.grad_g.w.resize(w.size());
  for (std::size_t n = 0; n < w.size(); ++n) out.grad_g.w[n] = at_theta.grad_w[n] - at_inner.grad_w[n];
  out.grad_g.theta = out.grad_f.theta;
  return out;
}

}  // namespace semcast
