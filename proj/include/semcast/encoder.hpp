#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "semcast/channel.hpp"
#include "semcast/data.hpp"
#include "semcast/network.hpp"
#include "semcast/receivers.hpp"

namespace semcast {

struct PolicyConfig {
  double log_sigma_min = -5.0;
  double log_sigma_max = 2.0;
  double clip_eps = 0.2;
  bool aux = true;  // include sum_n w_n L_RX_n in the TX loss
};

// Encoder network: input -> hidden relu -> latent linear (the state s) ->
// 2B linear head holding [mu | raw log-sigma].
struct EncoderSpec {
  NetworkSpec net;
  std::size_t bits = 0;

  static EncoderSpec make(std::size_t input_dim, std::size_t bits, std::size_t hidden = 256, std::size_t latent = 128);
  std::size_t latent() const { return net.layers()[state_layer()].out; }
  std::size_t state_layer() const { return net.depth() - 2; }
  std::size_t input_dim() const { return net.input_dim(); }
};

// Critic V(s): latent -> hidden relu -> 1 linear.
NetworkSpec make_critic(std::size_t latent, std::size_t hidden = 64);

struct Agent {
  EncoderSpec encoder;
  NetworkSpec critic;
  PolicyConfig policy;
};

// Semantic state s for every row of `images` (T x latent).
Matrix encode(const EncoderSpec& spec, const ParamVector& theta, const Matrix& images);

struct PolicyHead {
  ForwardCache cache;
  Matrix mu;         // T x B
  Matrix log_sigma;  // clamped, T x B
  Matrix sigma;      // T x B
  Matrix active;     // 1 where the clamp is inactive, else 0

  const Matrix& state(const EncoderSpec& spec) const { return cache.layer_output(spec.state_layer()); }
};

PolicyHead policy_forward(const EncoderSpec& spec, const ParamVector& theta, const Matrix& images,
                          const PolicyConfig& cfg);

struct PolicySample {
  Matrix action;  // mu + sigma * xi
  Matrix xi;
  std::vector<double> log_prob;
};

PolicySample sample_action(const PolicyHead& head, Rng& rng);
// Same with the standard-normal draws supplied.
PolicySample sample_action(const PolicyHead& head, Matrix xi);

// sum_i [-(a_i - mu_i)^2 / (2 sigma_i^2) - log sigma_i - log(2 pi) / 2]
double gaussian_log_prob(std::span<const double> a, std::span<const double> mu, std::span<const double> log_sigma);

// sum_n w_n * metrics_n
double reward(std::span<const double> w, std::span<const double> metrics);

// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)
double ppo_term(double ratio, double adv, double eps);

std::vector<double> critic_value(const NetworkSpec& critic, const ParamVector& chi, const Matrix& states);

struct ValueLoss {
  double value = 0.0;
  GradVector grad;
};

// mean_t (V(s_t) - r_t)^2, gradient w.r.t. chi only.
ValueLoss value_loss(const NetworkSpec& critic, const ParamVector& chi, const Matrix& states,
                     std::span<const double> rewards);

// One sampled mini-batch with every draw frozen, recorded under theta_old.
struct TransitionBatch {
  Batch data;
  Matrix state;  // T x latent
  Matrix xi;
  Matrix action;
  std::vector<double> log_prob_old;
  std::vector<ChannelDraw> draws;  // per receiver, T*B entries row-major
  Matrix metrics;                  // T x N, task metric per receiver
  std::vector<double> value;       // V(s_t)
  std::vector<double> rx_loss;     // L_RX_n at theta_old

  std::size_t size() const { return data.size(); }
  std::size_t receivers() const { return draws.size(); }
  std::vector<double> rewards(std::span<const double> w) const;
};

// The decoders seen by the encoder: spec plus frozen parameters.
struct ReceiverView {
  const ReceiverSpec* spec;
  const ParamVector* phi;
};

// Quantize, modulate and pass `actions` (T x B) through one realization of the
// channel; the realization is returned through `draw` when given.
Matrix transmit_actions(const Matrix& actions, const ChannelConfig& channel, Rng& rng, ChannelDraw* draw = nullptr);

TransitionBatch collect_batch(const Agent& agent, const ParamVector& theta_old, const ParamVector& chi,
                              std::span<const ReceiverView> receivers, Batch data, Rng& rng,
                              ClassReward class_reward = ClassReward::probability);

enum class RatioMode { clipped, unclipped };

struct TxEval {
  double loss = 0.0;
  double actor = 0.0;
  std::vector<double> rx_loss;  // surrogate-path L_RX_n, empty with aux off
  std::vector<double> grad_w;   // d loss / d w
  GradVector grad_theta;        // empty unless requested
  std::vector<double> ratio;
};

// L_TX(theta; w, phi) = actor + sum_n w_n L_RX_n on the frozen batch. The
// actor uses clipped or plain ratios; the auxiliary term goes through the
// straight-through quantizer with the batch's channel draws.
TxEval tx_loss(const Agent& agent, const ParamVector& theta, std::span<const double> w,
               std::span<const ReceiverView> receivers, const TransitionBatch& batch, RatioMode mode, bool want_grad);

// tx_loss with the auxiliary term disabled.
TxEval actor_loss(const Agent& agent, const ParamVector& theta, std::span<const double> w,
                  const TransitionBatch& batch, RatioMode mode = RatioMode::clipped, bool want_grad = true);

struct InnerStep {
  double loss = 0.0;
  GradVector grad;
};

// Objective at iterate theta for inner step h.
using InnerObjective = std::function<InnerStep(const ParamVector& theta, std::size_t h)>;

struct InnerResult {
  ParamVector theta;
  std::vector<double> losses;  // loss before each step
};

// H gradient steps on a copy of theta. Throws DivergenceError when a loss is
// non-finite or exceeds the first by more than 10 * max(|first|, 1).
InnerResult inner_descent(const ParamVector& theta, const InnerObjective& objective, std::size_t steps, double lr);

}  // namespace semcast
