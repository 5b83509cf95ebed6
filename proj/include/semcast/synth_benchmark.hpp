#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "semcast/matrix.hpp"
#include "semcast/trilevel.hpp"

namespace semcast {

// Quadratic tri-level test problem with a closed-form lower-level solution:
//   inner:  L(theta; w) = 1/2 (theta - A w - c)^T Q (theta - A w - c),  theta*(w) = A w + c
//   upper:  F(w, theta) = 1/2 |theta - theta_t|_R^2 + 1/2 |w - w_t|_S^2
// with theta_t = theta*(w_t) and w_t inside the simplex, so (w_t, theta_t)
// is feasible and stationary.
struct SynthProblem {
  Matrix a;  // n_theta x n_w
  std::vector<double> c;
  Matrix q, r, s;  // symmetric positive definite
  std::vector<double> w_target;
  std::vector<double> theta_target;

  std::size_t n_w() const { return w_target.size(); }
  std::size_t n_theta() const { return theta_target.size(); }

  double inner(const std::vector<double>& w, const std::vector<double>& theta) const;
  // grad_w L, grad_theta L
  JointVector inner_grad(const std::vector<double>& w, const std::vector<double>& theta) const;
  double upper(const std::vector<double>& w, const std::vector<double>& theta) const;
  JointVector upper_grad(const std::vector<double>& w, const std::vector<double>& theta) const;
  std::vector<double> theta_star(const std::vector<double>& w) const;
};

// Dimensions must be in 1..10.
SynthProblem synth_trilevel_benchmark(std::size_t n_w, std::size_t n_theta, std::uint64_t seed);

struct SynthConfig {
  double eta = 1e-2;
  double beta = 0.5;
  double inner_lr = 0.1;
  std::size_t inner_steps = 5;
  std::size_t iterations = 400;
  double fallback_threshold = 1e-12;
};

struct SynthRow {
  std::size_t iter = 0;
  double f = 0.0;
  double g_tilde = 0.0;
  double g_true = 0.0;  // L(theta; w) - L(theta*(w); w) = L(theta; w)
  double psi = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  double g_dot_d = 0.0;
  bool fallback = false;
  std::vector<double> w;
};

// The weight-assignment loop with analytic gradients in place of the neural
// ones: H inner steps, g_tilde, grad_g = grad L(v) - [grad_w L(theta_H), 0],
// lambda/d, projected joint step. Starts from uniform w and a perturbed theta.
std::vector<SynthRow> run_synth_trilevel(const SynthProblem& p, const SynthConfig& cfg, std::uint64_t seed);

// Direction bundle at an arbitrary point (exposed for the stationarity check).
DescentDirection synth_direction(const SynthProblem& p, const SynthConfig& cfg, const std::vector<double>& w,
                                 const std::vector<double>& theta, double* g_tilde_out = nullptr);

// min psi over rows with iter < l
double min_psi(const std::vector<SynthRow>& rows, std::size_t l);

void write_synth_csv(std::ostream& out, const std::vector<SynthRow>& rows);

}  // namespace semcast
