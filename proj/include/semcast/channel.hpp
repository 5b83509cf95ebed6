#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcast/rng.hpp"

namespace semcast {

enum class ChannelKind { awgn, rayleigh, rician };

std::string_view to_string(ChannelKind k);
ChannelKind parse_channel_kind(std::string_view name);

struct ChannelConfig {
  ChannelKind kind = ChannelKind::awgn;
  double snr_db = 4.0;  // +inf means noiseless
  double rician_k = 3.0;

  void validate() const;
};

using BitVector = std::vector<std::uint8_t>;
using ReceivedSignal = std::vector<double>;

// B / (8 * C * H * W)
double compute_cbr(std::size_t bits, std::size_t channels, std::size_t height, std::size_t width);

// bit_i = 1 iff x_i >= 0
BitVector quantize(std::span<const double> x);

// BPSK: 0 -> -1, 1 -> +1
std::vector<double> modulate(const BitVector& bits);

// Hard sign decision, the inverse of modulate on noiseless symbols.
BitVector demap(std::span<const double> symbols);

// Noise variance for unit-power symbols: 10^(-snr_db / 10); 0 at +inf.
double snr_to_sigma2(double snr_db);

// One realization of the link for B symbols: y = gain * s + noise.
struct ChannelDraw {
  std::vector<double> gain;   // |h| per symbol (1 for AWGN)
  std::vector<double> noise;  // N(0, sigma^2) per symbol
};

ChannelDraw draw_channel(std::size_t symbols, const ChannelConfig& cfg, Rng& rng);
ReceivedSignal apply_channel(std::span<const double> symbols, const ChannelDraw& draw);

// draw_channel followed by apply_channel.
ReceivedSignal transmit(std::span<const double> symbols, const ChannelConfig& cfg, Rng& rng);

}  // namespace semcast
