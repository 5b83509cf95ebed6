#include "semcast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "semcast/error.hpp"
#include "semcast/kernels.hpp"
#include "semcast/metrics.hpp"
#include "semcast/rng.hpp"

namespace semcast {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kEvalChunk = 250;

void apply_threads(int threads) {
  const char* env = std::getenv("SEMCAST_THREADS");
  if (threads > 0 || (env && *env)) kernels::set_thread_count(threads);
}

Dataset take_rows(const Dataset& src, std::size_t begin, std::size_t end, Split split) {
  const std::size_t p = src.dims().size();
  Matrix x(end - begin, p);
  std::vector<std::uint8_t> y(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    std::copy(src.images().row(i).begin(), src.images().row(i).end(), x.row(i - begin).begin());
    y[i - begin] = src.labels()[i];
  }
  return Dataset(std::move(x), std::move(y), src.classes(), src.dims(), split);
}

std::pair<Dataset, Dataset> load_data(const ExperimentConfig& cfg) {
  if (cfg.data_source == DataSource::synthetic) {
    const auto all = synth_dataset(cfg.synthetic_n + cfg.synthetic_test_n, cfg.synthetic_dim, cfg.synthetic_classes,
                                   cfg.seed, cfg.synthetic_noise);
    return {take_rows(all, 0, cfg.synthetic_n, Split::train),
            take_rows(all, cfg.synthetic_n, all.size(), Split::test)};
  }
  const fs::path dir = cfg.mnist_dir;
  return {load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", Split::train,
                         cfg.train_limit),
          load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", Split::test,
                         cfg.test_limit)};
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Rethrows `e` with a location prefix, keeping the most specific type.
[[noreturn]] void rethrow_at(const Error& e, const std::string& where) {
  const std::string msg = where + ": " + e.what();
  if (auto* nf = dynamic_cast<const NonFiniteError*>(&e)) throw NonFiniteError(msg, nf->step());
  if (dynamic_cast<const DivergenceError*>(&e)) throw DivergenceError(msg);
  if (dynamic_cast<const KktViolation*>(&e)) throw KktViolation(msg);
  if (dynamic_cast<const DimensionError*>(&e)) throw DimensionError(msg);
  throw Error(msg);
}

Matrix policy_actions(const Experiment& ex, const ParamVector& theta, const Matrix& images, Rng& rng) {
  auto head = policy_forward(ex.agent.encoder, theta, images, ex.agent.policy);
  if (ex.cfg.eval_sample) return sample_action(head, rng).action;
  return std::move(head.mu);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ParamVector weights_as_params(const std::vector<double>& w) {
  return ParamVector({LayerShape{static_cast<std::uint32_t>(w.size()), 1, false}}, w);
}

void check_finite(const TraceRecord& r) {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(r.reward) || bad(r.psi) || bad(r.lambda) || std::any_of(r.w.begin(), r.w.end(), bad) ||
      std::any_of(r.loss.begin(), r.loss.end(), bad) || std::any_of(r.metric.begin(), r.metric.end(), bad))
    throw NonFiniteError("non-finite value in the cycle trace", r.iter);
}

}  // namespace

std::size_t Experiment::iters_per_epoch() const {
  if (cfg.iters_per_epoch > 0) return cfg.iters_per_epoch;
  return (train.size() + cfg.batch - 1) / cfg.batch;
}

Experiment make_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto [train_set, test_set] = load_data(cfg);
  const auto dims = train_set.dims();
  const std::size_t classes = train_set.classes();
  Experiment ex{cfg,
                Agent{EncoderSpec::make(dims.size(), cfg.bits, cfg.encoder_hidden, cfg.latent),
                      make_critic(cfg.latent, cfg.critic_hidden),
                      PolicyConfig{cfg.log_sigma_min, cfg.log_sigma_max, cfg.clip_eps, cfg.aux}},
                {},
                std::move(train_set),
                std::move(test_set)};
  for (const auto& r : cfg.receivers) {
    ReceiverSpec spec{r.task, default_decoder_net(r.task, cfg.bits, dims, classes, r.hidden), r.channel};
    spec.validate(cfg.bits, dims, classes);
    ex.receivers.push_back(std::move(spec));
  }
  return ex;
}

std::vector<ReceiverView> TrainState::views(const Experiment& ex) const {
  std::vector<ReceiverView> v;
  for (std::size_t n = 0; n < ex.receivers.size(); ++n) v.push_back({&ex.receivers[n], &phis[n]});
  return v;
}

TrainState init_state(const Experiment& ex) {
  const auto seed = ex.cfg.seed;
  const auto init = tag(StreamPurpose::init);
  TrainState s;
  s.theta = glorot_init(ex.agent.encoder.net, derive_seed(seed, {init, 1}));
  const std::size_t head = ex.agent.encoder.net.depth() - 1;
  double* bias = s.theta.bias(head);
  std::fill(bias + ex.agent.encoder.bits, bias + 2 * ex.agent.encoder.bits, ex.cfg.log_sigma_init);
  s.theta_old = s.theta;
  s.chi = glorot_init(ex.agent.critic, derive_seed(seed, {init, 2}));
  for (std::size_t n = 0; n < ex.receivers.size(); ++n)
    s.phis.push_back(glorot_init(ex.receivers[n].net, derive_seed(seed, {init, 3 + n})));
  s.w.assign(ex.receivers.size(), 1.0 / static_cast<double>(ex.receivers.size()));
  return s;
}

TraceRecord run_update_cycle(const Experiment& ex, TrainState& state, std::size_t epoch, std::size_t iter) {
  const auto& cfg = ex.cfg;
  const auto& agent = ex.agent;
  auto stream = [&](StreamPurpose p, std::uint64_t k) { return derive_stream(cfg.seed, {epoch, iter, tag(p), k}); };
  const std::size_t n_rx = ex.receivers.size();

  TraceRecord rec;
  rec.epoch = epoch;
  rec.iter = iter;
  try {
    // Decoders: one shared batch per local step, an independent channel draw per receiver.
    for (std::size_t k = 0; k < cfg.kappa; ++k) {
      Rng rng = stream(StreamPurpose::decoder_batch, k);
      Batch b = sample_batch(ex.train, cfg.batch, rng, cfg.flip);
      const auto head = policy_forward(agent.encoder, state.theta, b.images, agent.policy);
      const auto act = sample_action(head, rng);
      for (std::size_t n = 0; n < n_rx; ++n) {
        ReceivedBatch rb{transmit_actions(act.action, ex.receivers[n].channel, rng), b};
        decoder_step(ex.receivers[n], state.phis[n], rb, cfg.lr_decoder, k);
      }
    }

    const auto views = state.views(ex);
    const std::vector<double> w_pre = state.w;

    Rng final_rng = stream(StreamPurpose::final_batch, 0);
    auto collect = [&](Rng& rng) {
      return collect_batch(agent, state.theta_old, state.chi, views, sample_batch(ex.train, cfg.batch, rng, cfg.flip),
                           rng, cfg.class_reward);
    };

    if (!cfg.ew) {
      const InnerObjective objective = [&](const ParamVector& th, std::size_t h) {
        Rng rng = stream(StreamPurpose::inner_batch, h);
        const auto tb = collect(rng);
        auto ev = tx_loss(agent, th, state.w, views, tb, RatioMode::clipped, true);
        return InnerStep{ev.loss, std::move(ev.grad_theta)};
      };
      const auto inner = inner_descent(state.theta, objective, cfg.inner_steps, cfg.lr_inner);

      const auto tb = collect(final_rng);
      auto tg = trilevel_gradients(agent, state.theta, inner.theta, state.w, views, tb);
      const auto dd = lambda_and_direction(std::move(tg.grad_f), std::move(tg.grad_g), cfg.beta, cfg.fallback_threshold);
      const auto kkt = kkt_report(dd, tg.g_tilde);
      auto next = apply_direction({state.w, state.theta}, dd.d, cfg.lr_joint);
      state.w = std::move(next.w);
      state.theta = std::move(next.theta);
      rec.lambda = kkt.lambda;
      rec.rho = kkt.rho;
      rec.psi = kkt.psi;
      rec.g_tilde = kkt.g_tilde;
      rec.g_dot_d = kkt.g_dot_d;
      rec.fallback = kkt.fallback;
      rec.loss = tb.rx_loss;
      rec.reward = mean(tb.rewards(w_pre));
      const auto vl = value_loss(agent.critic, state.chi, tb.state, tb.rewards(w_pre));
      state.chi = sgd_step(state.chi, vl.grad, cfg.lr_critic, iter);
    } else {
      const auto tb = collect(final_rng);
      const auto ev = tx_loss(agent, state.theta, state.w, views, tb, RatioMode::unclipped, true);
      double psi = 0.0;
      auto& th = state.theta.storage();
      const auto& g = ev.grad_theta.storage();
      for (std::size_t i = 0; i < th.size(); ++i) {
        psi += g[i] * g[i];
        th[i] -= cfg.lr_joint * g[i];
      }
      rec.psi = psi;
      rec.g_tilde = NAN;
      rec.g_dot_d = NAN;
      rec.loss = tb.rx_loss;
      rec.reward = mean(tb.rewards(w_pre));
      const auto vl = value_loss(agent.critic, state.chi, tb.state, tb.rewards(w_pre));
      state.chi = sgd_step(state.chi, vl.grad, cfg.lr_critic, iter);
    }
    state.theta_old = state.theta;
    rec.w = state.w;

    // Held-out metrics under the updated encoder.
    Rng rng = stream(StreamPurpose::heldout, 0);
    const Batch hb = sample_batch(ex.test, cfg.heldout_batch ? cfg.heldout_batch : cfg.batch, rng);
    const Matrix actions = policy_actions(ex, state.theta, hb.images, rng);
    for (std::size_t n = 0; n < n_rx; ++n) {
      const auto& spec = ex.receivers[n];
      const Matrix out = decode(transmit_actions(actions, spec.channel, rng), spec, state.phis[n]);
      rec.metric.push_back(mean(task_metrics(spec.task, hb, out, ClassReward::indicator)));
    }
    if (!state.theta.all_finite() || !state.chi.all_finite())
      throw NonFiniteError("parameters are not finite after the update", iter);
    check_finite(rec);
  } catch (const Error& e) {
    rethrow_at(e, "epoch " + std::to_string(epoch) + " iter " + std::to_string(iter));
  }
  return rec;
}

std::string trace_header(std::size_t receivers) {
  std::string h = "epoch,iter,reward";
  for (const char* group : {"w_", "loss_", "metric_"})
    for (std::size_t n = 1; n <= receivers; ++n) h += "," + std::string(group) + std::to_string(n);
  return h + ",lambda,rho,psi,g_tilde,g_dot_d,fallback";
}

void write_trace_row(std::ostream& out, const TraceRecord& r) {
  std::string line = std::to_string(r.epoch) + "," + std::to_string(r.iter) + "," + fmt(r.reward);
  for (const auto* group : {&r.w, &r.loss, &r.metric})
    for (double v : *group) line += "," + fmt(v);
  for (double v : {r.lambda, r.rho, r.psi, r.g_tilde, r.g_dot_d}) line += "," + fmt(v);
  line += r.fallback ? ",1\n" : ",0\n";
  out << line;
  out.flush();
}

void save_state(const fs::path& dir, const TrainState& state) {
  fs::create_directories(dir);
  save_checkpoint((dir / "encoder.bin").string(), state.theta);
  save_checkpoint((dir / "critic.bin").string(), state.chi);
  for (std::size_t n = 0; n < state.phis.size(); ++n)
    save_checkpoint((dir / ("decoder_" + std::to_string(n + 1) + ".bin")).string(), state.phis[n]);
  save_checkpoint((dir / "weights.bin").string(), weights_as_params(state.w));
}

TrainState load_state(const fs::path& dir, const Experiment& ex) {
  auto load = [&](const std::string& name, const std::vector<LayerShape>& layout) {
    auto p = load_checkpoint((dir / name).string());
    if (p.layout() != layout) throw FormatError((dir / name).string() + ": layout does not match the configured network");
    return p;
  };
  TrainState s;
  s.theta = load("encoder.bin", ex.agent.encoder.net.layout());
  s.theta_old = s.theta;
  s.chi = load("critic.bin", ex.agent.critic.layout());
  for (std::size_t n = 0; n < ex.receivers.size(); ++n)
    s.phis.push_back(load("decoder_" + std::to_string(n + 1) + ".bin", ex.receivers[n].net.layout()));
  const std::vector<double> uniform(ex.receivers.size(), 0.0);
  s.w = load("weights.bin", weights_as_params(uniform).layout()).storage();
  return s;
}

TrainResult train(const Experiment& ex) {
  apply_threads(ex.cfg.threads);
  const fs::path out = ex.cfg.out;
  fs::create_directories(out / "checkpoints");
  TrainResult res;
  res.trace_path = out / "trace.csv";
  res.final_dir = out / "final";
  std::ofstream trace(res.trace_path, std::ios::trunc);
  if (!trace) throw Error("cannot write " + res.trace_path.string());
  trace << trace_header(ex.receivers.size()) << '\n';

  res.state = init_state(ex);
  std::vector<fs::path> kept;
  const std::size_t iters = ex.iters_per_epoch();
  for (std::size_t epoch = 1; epoch <= ex.cfg.epochs; ++epoch) {
    for (std::size_t iter = 1; iter <= iters; ++iter) {
      try {
        res.trace.push_back(run_update_cycle(ex, res.state, epoch, iter));
      } catch (const Error& e) {
        const std::string last = kept.empty() ? "none" : kept.back().string();
        rethrow_at(e, std::string("training aborted (last good checkpoint: ") + last + ")");
      }
      write_trace_row(trace, res.trace.back());
      if (!trace) throw Error("write failed on " + res.trace_path.string());
    }
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03zu", epoch);
    kept.push_back(out / "checkpoints" / name);
    save_state(kept.back(), res.state);
    if (ex.cfg.keep_checkpoints > 0 && kept.size() > ex.cfg.keep_checkpoints) {
      fs::remove_all(kept.front());
      kept.erase(kept.begin());
    }
  }
  save_state(res.final_dir, res.state);
  return res;
}

std::vector<EvalRow> evaluate(const Experiment& ex, const TrainState& state, const std::vector<double>& snr_grid) {
  apply_threads(ex.cfg.threads);
  std::vector<EvalRow> rows;
  const std::size_t n_test = ex.test.size();
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    for (std::size_t n = 0; n < ex.receivers.size(); ++n) {
      ReceiverSpec spec = ex.receivers[n];
      spec.channel.snr_db = snr_grid[i];
      double ssim_sum = 0.0, psnr_sum = 0.0, correct = 0.0;
      for (std::size_t begin = 0, chunk = 0; begin < n_test; begin += kEvalChunk, ++chunk) {
        Rng rng = derive_stream(ex.cfg.seed, {tag(StreamPurpose::evaluation), i, n, chunk});
        const Batch b = slice_batch(ex.test, begin, std::min(n_test, begin + kEvalChunk));
        const Matrix actions = policy_actions(ex, state.theta, b.images, rng);
        const Matrix out = decode(transmit_actions(actions, spec.channel, rng), spec, state.phis[n]);
        for (std::size_t t = 0; t < b.size(); ++t) {
          if (spec.task == TaskKind::reconstruction) {
            ssim_sum += ssim(b.images.row(t), out.row(t));
            psnr_sum += psnr(b.images.row(t), out.row(t));
          } else {
            correct += argmax(out.row(t)) == b.labels[t] ? 1.0 : 0.0;
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(n_test);
      EvalRow r{snr_grid[i], n + 1, spec.task, NAN, NAN, NAN};
      if (spec.task == TaskKind::reconstruction) {
        r.ssim = ssim_sum * inv;
        r.psnr = psnr_sum * inv;
      } else {
        r.accuracy = correct * inv;
      }
      rows.push_back(r);
    }
  }
  return rows;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
  out << "snr_db,receiver,task,ssim,psnr,accuracy\n";
  for (const auto& r : rows)
    out << fmt(r.snr_db) << ',' << r.receiver << ',' << to_string(r.task) << ',' << fmt(r.ssim) << ','
        << fmt(r.psnr) << ',' << fmt(r.accuracy) << '\n';
}

}  // namespace semcast
