#include "semcast/channel.hpp"

#include <cmath>
#include <random>

#include "semcast/error.hpp"

namespace semcast {

std::string_view to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::awgn: return "awgn";
    case ChannelKind::rayleigh: return "rayleigh";
    case ChannelKind::rician: return "rician";
  }
  return "?";
}

ChannelKind parse_channel_kind(std::string_view name) {
  for (auto k : {ChannelKind::awgn, ChannelKind::rayleigh, ChannelKind::rician})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown channel kind '" + std::string(name) + "' (expected awgn, rayleigh or rician)");
}

void ChannelConfig::validate() const {
  if (std::isnan(snr_db) || snr_db == -INFINITY) throw ConfigError("snr_db must be a real number or +inf");
  if (kind == ChannelKind::rician && !(rician_k > 0.0 && std::isfinite(rician_k)))
    throw ConfigError("rician_k must be a positive real");
}

double compute_cbr(std::size_t bits, std::size_t channels, std::size_t height, std::size_t width) {
  return static_cast<double>(bits) / (8.0 * static_cast<double>(channels * height * width));
}

BitVector quantize(std::span<const double> x) {
  BitVector bits(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) bits[i] = x[i] >= 0.0 ? 1 : 0;
  return bits;
}

std::vector<double> modulate(const BitVector& bits) {
  std::vector<double> s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? 1.0 : -1.0;
  return s;
}

BitVector demap(std::span<const double> symbols) { return quantize(symbols); }

double snr_to_sigma2(double snr_db) {
  if (snr_db == INFINITY) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

ChannelDraw draw_channel(std::size_t symbols, const ChannelConfig& cfg, Rng& rng) {
  ChannelDraw d{std::vector<double>(symbols, 1.0), std::vector<double>(symbols, 0.0)};
  std::normal_distribution<double> normal(0.0, 1.0);
  if (cfg.kind != ChannelKind::awgn) {
    // h = (g1 + j g2) / sqrt(2), E|h|^2 = 1
    const double los = cfg.kind == ChannelKind::rician ? std::sqrt(cfg.rician_k / (cfg.rician_k + 1.0)) : 0.0;
    const double scatter = cfg.kind == ChannelKind::rician ? std::sqrt(1.0 / (cfg.rician_k + 1.0)) : 1.0;
    for (auto& g : d.gain) {
      const double re = normal(rng) / std::sqrt(2.0);
      const double im = normal(rng) / std::sqrt(2.0);
      g = std::hypot(los + scatter * re, scatter * im);
    }
  }
  const double sigma = std::sqrt(snr_to_sigma2(cfg.snr_db));
  if (sigma > 0.0)
    for (auto& n : d.noise) n = sigma * normal(rng);
  return d;
}

ReceivedSignal apply_channel(std::span<const double> symbols, const ChannelDraw& draw) {
  if (draw.gain.size() != symbols.size() || draw.noise.size() != symbols.size())
    throw DimensionError("channel draw length does not match symbol count");
  ReceivedSignal y(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) y[i] = draw.gain[i] * symbols[i] + draw.noise[i];
  return y;
}

ReceivedSignal transmit(std::span<const double> symbols, const ChannelConfig& cfg, Rng& rng) {
  return apply_channel(symbols, draw_channel(symbols.size(), cfg, rng));
}

}  // namespace semcast
