#include "semcast/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "semcast/error.hpp"

namespace semcast {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

EncoderSpec EncoderSpec::make(std::size_t input_dim, std::size_t bits, std::size_t hidden, std::size_t latent) {
  EncoderSpec spec;
  spec.bits = bits;
  spec.net = NetworkSpec({{input_dim, hidden, Activation::relu},
                          {hidden, latent, Activation::linear},
                          {latent, 2 * bits, Activation::linear}});
  return spec;
}

NetworkSpec make_critic(std::size_t latent, std::size_t hidden) {
  return NetworkSpec({{latent, hidden, Activation::relu}, {hidden, 1, Activation::linear}});
}

Matrix encode(const EncoderSpec& spec, const ParamVector& theta, const Matrix& images) {
  return forward(spec.net, theta, images).layer_output(spec.state_layer());
}

PolicyHead policy_forward(const EncoderSpec& spec, const ParamVector& theta, const Matrix& images,
                          const PolicyConfig& cfg) {
  PolicyHead h;
  h.cache = forward(spec.net, theta, images);
  const Matrix& out = h.cache.output();
  const std::size_t t_count = out.rows(), b = spec.bits;
  h.mu = Matrix(t_count, b);
  h.log_sigma = Matrix(t_count, b);
  h.sigma = Matrix(t_count, b);
  h.active = Matrix(t_count, b);
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t i = 0; i < b; ++i) {
      const double raw = out(t, b + i);
      h.mu(t, i) = out(t, i);
      h.log_sigma(t, i) = std::clamp(raw, cfg.log_sigma_min, cfg.log_sigma_max);
      h.sigma(t, i) = std::exp(h.log_sigma(t, i));
      h.active(t, i) = (raw > cfg.log_sigma_min && raw < cfg.log_sigma_max) ? 1.0 : 0.0;
    }
  return h;
}

double gaussian_log_prob(std::span<const double> a, std::span<const double> mu, std::span<const double> log_sigma) {
  double lp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double z = (a[i] - mu[i]) * std::exp(-log_sigma[i]);
    lp += -0.5 * z * z - log_sigma[i] - kHalfLog2Pi;
  }
  return lp;
}

PolicySample sample_action(const PolicyHead& head, Rng& rng) {
  Matrix xi(head.mu.rows(), head.mu.cols());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : xi.storage()) v = normal(rng);
  return sample_action(head, std::move(xi));
}

PolicySample sample_action(const PolicyHead& head, Matrix xi) {
  if (xi.rows() != head.mu.rows() || xi.cols() != head.mu.cols()) throw DimensionError("noise shape != policy shape");
  PolicySample s{Matrix(xi.rows(), xi.cols()), std::move(xi), std::vector<double>(head.mu.rows())};
  for (std::size_t i = 0; i < s.action.size(); ++i)
    s.action.data()[i] = head.mu.data()[i] + head.sigma.data()[i] * s.xi.data()[i];
  for (std::size_t t = 0; t < s.action.rows(); ++t)
    s.log_prob[t] = gaussian_log_prob(s.action.row(t), head.mu.row(t), head.log_sigma.row(t));
  return s;
}

double reward(std::span<const double> w, std::span<const double> metrics) {
  if (w.size() != metrics.size()) throw DimensionError("weight count != metric count");
  double r = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) r += w[n] * metrics[n];
  return r;
}

double ppo_term(double ratio, double adv, double eps) {
  return std::min(ratio * adv, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv);
}

std::vector<double> critic_value(const NetworkSpec& critic, const ParamVector& chi, const Matrix& states) {
  const auto cache = forward(critic, chi, states);
  return {cache.output().storage().begin(), cache.output().storage().end()};
}

ValueLoss value_loss(const NetworkSpec& critic, const ParamVector& chi, const Matrix& states,
                     std::span<const double> rewards) {
  if (rewards.size() != states.rows()) throw DimensionError("reward count != state count");
  const auto cache = forward(critic, chi, states);
  const double inv_t = 1.0 / static_cast<double>(states.rows());
  Matrix upstream(states.rows(), 1);
  double loss = 0.0;
  for (std::size_t t = 0; t < states.rows(); ++t) {
    const double e = cache.output()(t, 0) - rewards[t];
    loss += e * e;
    upstream(t, 0) = 2.0 * e * inv_t;
  }
  return {loss * inv_t, backward(critic, chi, cache, upstream, false).grad};
}

std::vector<double> TransitionBatch::rewards(std::span<const double> w) const {
  if (w.size() != metrics.cols()) throw DimensionError("weight count != receiver count");
  std::vector<double> r(size());
  for (std::size_t t = 0; t < size(); ++t) r[t] = reward(w, metrics.row(t));
  return r;
}

Matrix transmit_actions(const Matrix& actions, const ChannelConfig& channel, Rng& rng, ChannelDraw* draw) {
  const auto symbols = modulate(quantize(actions.storage()));
  ChannelDraw d = draw_channel(symbols.size(), channel, rng);
  Matrix y(actions.rows(), actions.cols());
  y.storage() = apply_channel(symbols, d);
  if (draw) *draw = std::move(d);
  return y;
}

TransitionBatch collect_batch(const Agent& agent, const ParamVector& theta_old, const ParamVector& chi,
                              std::span<const ReceiverView> receivers, Batch data, Rng& rng,
                              ClassReward class_reward) {
  TransitionBatch b;
  b.data = std::move(data);
  const auto head = policy_forward(agent.encoder, theta_old, b.data.images, agent.policy);
  auto sample = sample_action(head, rng);
  b.state = head.state(agent.encoder);
  b.xi = std::move(sample.xi);
  b.action = std::move(sample.action);
  b.log_prob_old = std::move(sample.log_prob);
  b.value = critic_value(agent.critic, chi, b.state);

  const std::size_t n_rx = receivers.size();
  b.draws.resize(n_rx);
  b.metrics = Matrix(b.size(), n_rx);
  b.rx_loss.resize(n_rx);
  for (std::size_t n = 0; n < n_rx; ++n) {
    const auto& rx = receivers[n];
    const Matrix y = transmit_actions(b.action, rx.spec->channel, rng, &b.draws[n]);
    const Matrix out = decode(y, *rx.spec, *rx.phi);
    b.rx_loss[n] = task_loss(rx.spec->task, b.data, out).value;
    const auto m = task_metrics(rx.spec->task, b.data, out, class_reward);
    for (std::size_t t = 0; t < b.size(); ++t) b.metrics(t, n) = m[t];
  }
  return b;
}

TxEval tx_loss(const Agent& agent, const ParamVector& theta, std::span<const double> w,
               std::span<const ReceiverView> receivers, const TransitionBatch& batch, RatioMode mode, bool want_grad) {
  const auto& cfg = agent.policy;
  const std::size_t t_count = batch.size(), bits = agent.encoder.bits, n_rx = batch.receivers();
  if (w.size() != n_rx) throw DimensionError("weight count != receiver count");
  if (cfg.aux && receivers.size() != n_rx) throw DimensionError("receiver views != batch receivers");
  const double inv_t = 1.0 / static_cast<double>(t_count);

  const auto head = policy_forward(agent.encoder, theta, batch.data.images, cfg);
  const auto r = batch.rewards(w);

  TxEval ev;
  ev.ratio.resize(t_count);
  ev.grad_w.assign(n_rx, 0.0);
  Matrix d_mu(t_count, bits), d_ls(t_count, bits);

  for (std::size_t t = 0; t < t_count; ++t) {
    const double lp = gaussian_log_prob(batch.action.row(t), head.mu.row(t), head.log_sigma.row(t));
    const double ratio = std::exp(lp - batch.log_prob_old[t]);
    if (!std::isfinite(ratio))
      throw NonFiniteError("policy ratio is not finite for sample " + std::to_string(t), t);
    ev.ratio[t] = ratio;
    const double adv = r[t] - batch.value[t];
    const double plain = ratio * adv;
    double selected = ratio;
    bool grad_flows = true;
    if (mode == RatioMode::clipped) {
      const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      if (clipped * adv < plain) {
        selected = clipped;
        grad_flows = false;
      }
    }
    ev.actor -= selected * adv * inv_t;
    for (std::size_t n = 0; n < n_rx; ++n) ev.grad_w[n] -= selected * batch.metrics(t, n) * inv_t;
    if (want_grad && grad_flows) {
      const double coef = -adv * ratio * inv_t;
      for (std::size_t i = 0; i < bits; ++i) {
        const double z = (batch.action(t, i) - head.mu(t, i)) / head.sigma(t, i);
        d_mu(t, i) += coef * z / head.sigma(t, i);
        d_ls(t, i) += coef * (z * z - 1.0);
      }
    }
  }
  ev.loss = ev.actor;

  if (cfg.aux) {
    ev.rx_loss.resize(n_rx);
    // straight-through bits: q(a_t) + (a(theta) - a_t)
    Matrix soft(t_count, bits);
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t i = 0; i < bits; ++i) {
        const double a_t = batch.action(t, i);
        const double a = head.mu(t, i) + head.sigma(t, i) * batch.xi(t, i);
        soft(t, i) = (a_t >= 0.0 ? 1.0 : 0.0) + (a - a_t);
      }
    for (std::size_t n = 0; n < n_rx; ++n) {
      const auto& rx = receivers[n];
      const auto& draw = batch.draws[n];
      Matrix y(t_count, bits);
      for (std::size_t k = 0; k < y.size(); ++k)
        y.data()[k] = draw.gain[k] * (2.0 * soft.data()[k] - 1.0) + draw.noise[k];
      const auto cache = forward(rx.spec->net, *rx.phi, y);
      const auto l = task_loss(rx.spec->task, batch.data, cache.output());
      ev.rx_loss[n] = l.value;
      ev.loss += w[n] * l.value;
      ev.grad_w[n] += l.value;
      if (want_grad && w[n] != 0.0) {
        const auto dy = backward(rx.spec->net, *rx.phi, cache, l.grad, true).input_grad;
        for (std::size_t t = 0; t < t_count; ++t)
          for (std::size_t i = 0; i < bits; ++i) {
            const double da = w[n] * 2.0 * draw.gain[t * bits + i] * dy(t, i);
            d_mu(t, i) += da;
            d_ls(t, i) += da * head.sigma(t, i) * batch.xi(t, i);
          }
      }
    }
  }

  if (want_grad) {
    Matrix upstream(t_count, 2 * bits);
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t i = 0; i < bits; ++i) {
        upstream(t, i) = d_mu(t, i);
        upstream(t, bits + i) = d_ls(t, i) * head.active(t, i);
      }
    ev.grad_theta = backward(agent.encoder.net, theta, head.cache, upstream, false).grad;
  }
  return ev;
}

TxEval actor_loss(const Agent& agent, const ParamVector& theta, std::span<const double> w,
                  const TransitionBatch& batch, RatioMode mode, bool want_grad) {
  Agent actor_only = agent;
  actor_only.policy.aux = false;
  return tx_loss(actor_only, theta, w, {}, batch, mode, want_grad);
}

InnerResult inner_descent(const ParamVector& theta, const InnerObjective& objective, std::size_t steps, double lr) {
  if (steps == 0) throw Error("inner descent needs H >= 1");
  InnerResult res{theta, {}};
  for (std::size_t h = 0; h < steps; ++h) {
    auto step = objective(res.theta, h);
    if (!std::isfinite(step.loss))
      throw DivergenceError("inner loss is not finite at step " + std::to_string(h));
    if (!res.losses.empty() && step.loss - res.losses.front() > 10.0 * std::max(std::abs(res.losses.front()), 1.0))
      throw DivergenceError("inner loss rose from " + std::to_string(res.losses.front()) + " to " +
                            std::to_string(step.loss) + " at step " + std::to_string(h));
    res.losses.push_back(step.loss);
    res.theta = sgd_step(res.theta, step.grad, lr, h);
  }
  return res;
}

}  // namespace semcast
