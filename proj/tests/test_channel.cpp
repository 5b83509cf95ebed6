#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "semcast/channel.hpp"
#include "semcast/error.hpp"

using namespace semcast;

TEST_CASE("compute_cbr reproduces the reported bandwidth ratios") {
  // 128 / 6272, 1024 / 6272, 5000 / 24576
  CHECK(compute_cbr(128, 1, 28, 28) == doctest::Approx(0.0204081632653).epsilon(1e-12));
  CHECK(compute_cbr(1024, 1, 28, 28) == doctest::Approx(0.1632653061224).epsilon(1e-12));
  CHECK(compute_cbr(5000, 3, 32, 32) == doctest::Approx(0.2034505208333).epsilon(1e-12));
  CHECK(std::round(compute_cbr(128, 1, 28, 28) * 100) / 100 == 0.02);
  CHECK(std::round(compute_cbr(1024, 1, 28, 28) * 100) / 100 == 0.16);
  CHECK(std::round(compute_cbr(5000, 3, 32, 32) * 100) / 100 == 0.2);
}

TEST_CASE("compute_cbr is monotone in B and in image area") {
  for (std::size_t b = 1; b < 2000; b += 37) CHECK(compute_cbr(b, 1, 28, 28) < compute_cbr(b + 1, 1, 28, 28));
  for (std::size_t h = 1; h < 64; ++h) CHECK(compute_cbr(128, 1, h + 1, 28) < compute_cbr(128, 1, h, 28));
}

TEST_CASE("quantize thresholds at zero with ties to one") {
  CHECK(quantize(std::vector<double>{0.3, -0.2, 0.0}) == BitVector{1, 0, 1});
  CHECK(quantize(std::vector<double>{-1, -1e-300, -5}) == BitVector{0, 0, 0});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(32);
    for (auto& v : x) v = n(rng);
    const double c = scale(rng);
    std::vector<double> cx(x);
    for (auto& v : cx) v *= c;
    CHECK(quantize(x) == quantize(cx));
  }
}

TEST_CASE("modulate maps bits to unit-power BPSK and demaps back") {
  CHECK(modulate({1, 0, 1}) == std::vector<double>{1, -1, 1});
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    BitVector b(1 + rng() % 200);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng() & 1);
    auto s = modulate(b);
    const double power = std::inner_product(s.begin(), s.end(), s.begin(), 0.0) / static_cast<double>(s.size());
    CHECK(power == 1.0);
    CHECK(demap(s) == b);
    // quantize -> modulate -> noiseless channel -> demap
    ChannelConfig clean{ChannelKind::awgn, INFINITY, 3.0};
    CHECK(demap(transmit(modulate(quantize(s)), clean, rng)) == b);
  }
}

TEST_CASE("snr_to_sigma2") {
  CHECK(snr_to_sigma2(0.0) == 1.0);
  CHECK(snr_to_sigma2(10.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(snr_to_sigma2(-6.0) == doctest::Approx(std::exp(0.6 * std::log(10.0))).epsilon(1e-14));
  CHECK(snr_to_sigma2(-6.0) == doctest::Approx(3.9810717055).epsilon(1e-10));
  CHECK(snr_to_sigma2(INFINITY) == 0.0);
}

TEST_CASE("transmit: noiseless AWGN is the identity") {
  Rng rng(3);
  std::vector<double> s{1, -1, 1, 1, -1};
  CHECK(transmit(s, {ChannelKind::awgn, INFINITY, 3.0}, rng) == s);
}

TEST_CASE("transmit: AWGN noise statistics at 0 dB") {
  const std::size_t n = 1'000'000;
  std::vector<double> s(n, 1.0);
  Rng rng(4);
  auto y = transmit(s, {ChannelKind::awgn, 0.0, 3.0}, rng);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += y[i] - s[i];
  mean /= n;
  for (std::size_t i = 0; i < n; ++i) var += (y[i] - s[i] - mean) * (y[i] - s[i] - mean);
  var /= n;
  CHECK(std::abs(var - 1.0) < 0.01);
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("transmit: fading gains have unit mean-square") {
  const std::size_t n = 1'000'000;
  for (auto kind : {ChannelKind::rayleigh, ChannelKind::rician}) {
    Rng rng(5);
    auto d = draw_channel(n, {kind, INFINITY, 3.0}, rng);
    double ms = 0.0;
    for (double g : d.gain) {
      CHECK_FALSE(g < 0.0);
      ms += g * g;
    }
    ms /= n;
    INFO(to_string(kind));
    CHECK(std::abs(ms - 1.0) < 0.01);
  }
}

TEST_CASE("transmit: Rician line-of-sight component raises the mean gain") {
  const std::size_t n = 200'000;
  Rng a(6), b(6);
  auto ray = draw_channel(n, {ChannelKind::rayleigh, INFINITY, 3.0}, a);
  auto ric = draw_channel(n, {ChannelKind::rician, INFINITY, 3.0}, b);
  const double mean_ray = std::accumulate(ray.gain.begin(), ray.gain.end(), 0.0) / n;
  const double mean_ric = std::accumulate(ric.gain.begin(), ric.gain.end(), 0.0) / n;
  // E|h| for Rayleigh with E|h|^2 = 1 is sqrt(pi)/2.
  CHECK(mean_ray == doctest::Approx(std::sqrt(M_PI) / 2).epsilon(0.005));
  CHECK(mean_ric > mean_ray);
}

TEST_CASE("transmit is reproducible for a fixed seed") {
  std::vector<double> s(500);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = (i % 3) ? 1.0 : -1.0;
  for (auto kind : {ChannelKind::awgn, ChannelKind::rayleigh, ChannelKind::rician}) {
    Rng a(77), b(77);
    ChannelConfig cfg{kind, 2.0, 3.0};
    CHECK(transmit(s, cfg, a) == transmit(s, cfg, b));
  }
}

TEST_CASE("channel config validation") {
  CHECK_THROWS_AS((ChannelConfig{ChannelKind::rician, 0.0, 0.0}.validate()), ConfigError);
  CHECK_NOTHROW((ChannelConfig{ChannelKind::rician, 0.0, 3.0}.validate()));
  CHECK_THROWS_AS(parse_channel_kind("ofdm"), ConfigError);
  CHECK(parse_channel_kind("rayleigh") == ChannelKind::rayleigh);
}
