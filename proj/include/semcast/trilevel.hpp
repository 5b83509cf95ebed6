#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semcast/encoder.hpp"
#include "semcast/param_vector.hpp"

namespace semcast {

// A (w, theta) pair of blocks: gradients and directions over the joint variable.
struct JointVector {
  std::vector<double> w;
  std::vector<double> theta;

  std::size_t size() const { return w.size() + theta.size(); }
};

double dot(const JointVector& a, const JointVector& b);
double norm2(const JointVector& a);

struct JointVariable {
  std::vector<double> w;
  ParamVector theta;
};

struct DescentDirection {
  JointVector grad_f;
  JointVector grad_g;
  double rho = 0.0;
  double lambda = 0.0;
  JointVector d;
  double psi = 0.0;
  bool fallback = false;  // ||grad_g|| <= threshold: lambda = 0, d = -grad_f
};

// rho = beta ||grad_g||^2, lambda = max((rho - <grad_g, grad_f>) / ||grad_g||^2, 0),
// d = -grad_f - lambda grad_g, psi = ||grad_f + lambda grad_g||^2.
DescentDirection lambda_and_direction(JointVector grad_f, JointVector grad_g, double beta,
                                      double fallback_threshold = 1e-12);

// Euclidean projection onto {w : w >= 0, sum w = 1}.
std::vector<double> project_simplex(std::span<const double> w);

// w <- P(w + eta d_w), theta <- theta + eta d_theta
JointVariable apply_direction(const JointVariable& v, const JointVector& d, double eta);

struct KktRecord {
  double psi = 0.0;
  double g_tilde = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  double g_dot_d = 0.0;
  bool fallback = false;
};

// Checks complementary slackness of the direction QP:
//   lambda > 0: |<grad_g, d> + rho| <= tol (1 + rho)
//   lambda = 0: <grad_g, d> <= -rho + tol (1 + rho)
// Throws KktViolation (message holds the whole bundle) otherwise. Fallback
// directions are recorded without the check.
KktRecord kkt_report(const DescentDirection& dd, double g_tilde, double tol = 1e-6);

std::string describe(const DescentDirection& dd);

// f(theta) - f(theta_inner)
double g_tilde(const std::function<double(const ParamVector&)>& f, const ParamVector& theta,
               const ParamVector& theta_inner);

struct TrilevelGradients {
  double loss_tx = 0.0;  // L_TX(theta; w, phi) on the batch
  double g_tilde = 0.0;
  std::vector<double> rx_loss;
  JointVector grad_f;
  JointVector grad_g;
};

// On one frozen batch recorded under theta (= theta_old):
//   g_tilde = L_TX(theta) - L_TX(theta_inner)
//   grad_f  = [-E(ratio Theta) + (L_RX_n)_n, policy gradient (no clipping) + sum_n w_n grad L_RX_n]
//   grad_g  = grad_f - [grad_w L_TX(theta_inner), 0]
TrilevelGradients trilevel_gradients(const Agent& agent, const ParamVector& theta, const ParamVector& theta_inner,
                                     std::span<const double> w, std::span<const ReceiverView> receivers,
                                     const TransitionBatch& batch);

}  // namespace semcast
