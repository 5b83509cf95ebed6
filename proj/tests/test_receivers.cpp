#include <cmath>
#include <random>

#include "doctest.h"
#include "semcast/encoder.hpp"
#include "semcast/error.hpp"
#include "semcast/receivers.hpp"
#include "semcast/toy_world.hpp"
#include "test_util.hpp"

using namespace semcast;
using semcast::testing::random_matrix;

namespace {

ReceivedBatch toy_received(const ToyWorld& w, std::size_t n, const Batch& data, Rng& rng) {
  const auto head = policy_forward(w.agent.encoder, w.theta, data.images, w.agent.policy);
  const auto a = sample_action(head, rng);
  return {transmit_actions(a.action, w.specs[n].channel, rng), data};
}

}  // namespace

TEST_CASE("decode: zero parameters give the head's neutral output") {
  const ImageDims dims{1, 28, 28};
  ReceiverSpec rec{TaskKind::reconstruction, default_decoder_net(TaskKind::reconstruction, 128, dims, 10), {}};
  ReceiverSpec cls{TaskKind::classification, default_decoder_net(TaskKind::classification, 128, dims, 10), {}};
  CHECK_NOTHROW(rec.validate(128, dims, 10));
  CHECK_NOTHROW(cls.validate(128, dims, 10));
  CHECK(rec.net.layers()[0].out == 256);
  CHECK(cls.net.layers()[0].out == 32);

  std::mt19937_64 rng(1);
  Matrix y = random_matrix(3, 128, rng, -2, 2);
  const Matrix img = decode(y, rec, ParamVector(rec.net.layout()));
  for (double v : img.storage()) CHECK(v == 0.5);
  const Matrix q = decode(y, cls, ParamVector(cls.net.layout()));
  for (double v : q.storage()) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(decode(Matrix(3, 127), rec, ParamVector(rec.net.layout())), DimensionError);
  CHECK_THROWS_AS(rec.validate(64, dims, 10), DimensionError);
}

TEST_CASE("decode: codomain holds for arbitrary finite inputs") {
  const auto w = make_toy_world(2);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix y = random_matrix(5, 6, rng, -50, 50);
    Rng r(trial);
    auto phi0 = perturb(w.phis[0], 3.0, r), phi1 = perturb(w.phis[1], 3.0, r);
    const Matrix img = decode(y, w.specs[0], phi0);
    for (double v : img.storage()) CHECK((v >= 0.0 && v <= 1.0));
    const Matrix q = decode(y, w.specs[1], phi1);
    for (std::size_t t = 0; t < q.rows(); ++t) {
      double s = 0;
      for (double v : q.row(t)) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("decode: fixed-seed pipeline is reproducible") {
  const auto w = make_toy_world(3);
  auto run = [&] {
    Rng rng(99);
    const auto rb = toy_received(w, 0, sample_batch(w.data, 16, rng), rng);
    return decode(rb.received, w.specs[0], w.phis[0]);
  };
  CHECK(run() == run());
}

TEST_CASE("local_update: kappa = 0 leaves phi unchanged") {
  const auto w = make_toy_world(4);
  Rng rng(1);
  ReceiverSampler sampler = [&](std::size_t, Rng& r) { return toy_received(w, 0, sample_batch(w.data, 8, r), r); };
  CHECK(local_update(w.specs[0], w.phis[0], sampler, 0, 0.1, rng) == w.phis[0]);
}

TEST_CASE("local_update: kappa = 1 equals one manual sgd_step") {
  const auto w = make_toy_world(5);
  for (std::size_t n = 0; n < 2; ++n) {
    Rng rng(7);
    const ReceivedBatch fixed = toy_received(w, n, sample_batch(w.data, 16, rng), rng);
    ReceiverSampler sampler = [&](std::size_t, Rng&) { return fixed; };
    const auto phi1 = local_update(w.specs[n], w.phis[n], sampler, 1, 0.05, rng);

    const auto cache = forward(w.specs[n].net, w.phis[n], fixed.received);
    const auto loss = task_loss(w.specs[n].task, fixed.targets, cache.output());
    const auto manual = sgd_step(w.phis[n], backward(w.specs[n].net, w.phis[n], cache, loss.grad).grad, 0.05);
    CHECK(phi1 == manual);
  }
}

TEST_CASE("local_update: 50 full-batch steps on a noiseless batch reduce the loss") {
  const auto w = make_toy_world(6, INFINITY);
  for (std::size_t n = 0; n < 2; ++n) {
    Rng rng(8);
    const ReceivedBatch fixed = toy_received(w, n, slice_batch(w.data, 0, w.data.size()), rng);
    ReceiverSampler sampler = [&](std::size_t, Rng&) { return fixed; };
    const auto phi = local_update(w.specs[n], w.phis[n], sampler, 50, 0.05, rng);
    const double before = task_loss(w.specs[n].task, fixed.targets, decode(fixed.received, w.specs[n], w.phis[n])).value;
    const double after = task_loss(w.specs[n].task, fixed.targets, decode(fixed.received, w.specs[n], phi)).value;
    CHECK(after < before);
  }
}

TEST_CASE("local_update: loss is non-increasing at lr 1e-3 in >= 95% of seeded trials") {
  int monotone = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    const auto w = make_toy_world(100 + trial, INFINITY);
    const std::size_t n = trial % 2;
    Rng rng(trial);
    const ReceivedBatch fixed = toy_received(w, n, slice_batch(w.data, 0, w.data.size()), rng);
    ParamVector phi = w.phis[n];
    double prev = INFINITY;
    bool ok = true;
    for (std::size_t k = 0; k < 20; ++k) {
      const double l = decoder_step(w.specs[n], phi, fixed, 1e-3, k);
      ok = ok && l <= prev;
      prev = l;
    }
    monotone += ok;
  }
  CHECK(monotone >= 0.95 * trials);
}

TEST_CASE("local_update never touches the encoder") {
  auto w = make_toy_world(7);
  const auto before = checksum(w.theta.values());
  Rng rng(3);
  ReceiverSampler sampler = [&](std::size_t, Rng& r) { return toy_received(w, 1, sample_batch(w.data, 8, r), r); };
  local_update(w.specs[1], w.phis[1], sampler, 10, 0.1, rng);
  CHECK(checksum(w.theta.values()) == before);
}

TEST_CASE("local_update halts on a non-finite loss with the step index") {
  const auto w = make_toy_world(8);
  ReceiverSampler sampler = [&](std::size_t k, Rng& r) {
    auto rb = toy_received(w, 0, sample_batch(w.data, 4, r), r);
    if (k == 3) rb.received(0, 0) = NAN;
    return rb;
  };
  Rng rng(1);
  try {
    local_update(w.specs[0], w.phis[0], sampler, 10, 0.1, rng);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.step() == 3);
  }
}
