#include "semcast/toy_world.hpp"

namespace semcast {

std::vector<ReceiverView> ToyWorld::views() const {
  std::vector<ReceiverView> v;
  for (std::size_t n = 0; n < specs.size(); ++n) v.push_back({&specs[n], &phis[n]});
  return v;
}

TransitionBatch ToyWorld::batch(const ParamVector& theta_old, std::size_t t, Rng& rng) const {
  const auto rx = views();
  return collect_batch(agent, theta_old, chi, rx, sample_batch(data, t, rng), rng);
}

ToyWorld make_toy_world(std::uint64_t seed, double snr_db) {
  constexpr std::size_t kDim = 12, kBits = 6, kClasses = 4;
  const ChannelConfig channel{ChannelKind::awgn, snr_db, 3.0};
  ToyWorld w{
      Agent{EncoderSpec::make(kDim, kBits, 10, 5), make_critic(5, 7), PolicyConfig{}},
      {ReceiverSpec{TaskKind::reconstruction, NetworkSpec({{kBits, 8, Activation::relu}, {8, kDim, Activation::sigmoid}}),
                    channel},
       ReceiverSpec{TaskKind::classification,
                    NetworkSpec({{kBits, 5, Activation::relu}, {5, kClasses, Activation::softmax}}), channel}},
      {},
      {},
      {},
      synth_dataset(64, kDim, kClasses, seed, 0.1)};
  w.theta = glorot_init(w.agent.encoder.net, derive_seed(seed, {tag(StreamPurpose::init), 1}));
  w.chi = glorot_init(w.agent.critic, derive_seed(seed, {tag(StreamPurpose::init), 2}));
  for (std::size_t n = 0; n < w.specs.size(); ++n)
    w.phis.push_back(glorot_init(w.specs[n].net, derive_seed(seed, {tag(StreamPurpose::init), 3 + n})));
  return w;
}

ParamVector perturb(const ParamVector& theta, double scale, Rng& rng) {
  ParamVector out = theta;
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : out.values()) v += n(rng);
  return out;
}

}  // namespace semcast
