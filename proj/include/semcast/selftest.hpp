#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace semcast {

struct SuiteResult {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  double worst = 0.0;  // largest error seen, in the suite's own unit
  std::string note;

  bool ok() const { return total > 0 && passed == total; }
};

// Coordinate-wise central differences against every analytic backward pass:
// plain networks (rel 1e-5), actor loss, TX loss surrogate path, value loss
// and the joint (w, theta) gradients (rel 1e-4).
std::vector<SuiteResult> run_gradcheck(std::uint64_t seed, std::size_t instances = 20);

// lambda_and_direction against a brute-force dual search over lambda >= 0
// (grid then golden-section refine), L2 distance of d within 1e-3.
SuiteResult run_qp_oracle(std::uint64_t seed, std::size_t instances = 100);

// kkt_report on random instances of varied scale and dimension.
SuiteResult run_kkt_suite(std::uint64_t seed, std::size_t instances = 1000);

// project_simplex against grid minimization of the distance on 2-D and 3-D
// simplices, plus exact idempotence.
SuiteResult run_simplex_oracle(std::uint64_t seed, std::size_t instances = 100);

// Brute-force maximizer of the dual of min <f, d> + |d|^2 / 2 s.t. <g, d> <= -rho.
double dual_search_lambda(const std::vector<double>& f, const std::vector<double>& g, double rho);

// Grid search for the closest simplex point (2 or 3 coordinates).
std::vector<double> simplex_grid_search(const std::vector<double>& a);

}  // namespace semcast
