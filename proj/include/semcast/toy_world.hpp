#pragma once

#include <cstdint>
#include <vector>

#include "semcast/data.hpp"
#include "semcast/encoder.hpp"
#include "semcast/receivers.hpp"

namespace semcast {

// A tiny end-to-end instance (12-pixel images, 6 bits, one reconstruction and
// one 4-class receiver) small enough for coordinate-wise finite differences.
struct ToyWorld {
  Agent agent;
  std::vector<ReceiverSpec> specs;
  std::vector<ParamVector> phis;
  ParamVector theta;
  ParamVector chi;
  Dataset data;

  std::vector<ReceiverView> views() const;
  // A frozen batch of `t` samples recorded under `theta_old`.
  TransitionBatch batch(const ParamVector& theta_old, std::size_t t, Rng& rng) const;
};

ToyWorld make_toy_world(std::uint64_t seed, double snr_db = 4.0);

// theta + N(0, scale^2) per coordinate.
ParamVector perturb(const ParamVector& theta, double scale, Rng& rng);

}  // namespace semcast
