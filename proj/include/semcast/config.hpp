#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semcast/channel.hpp"
#include "semcast/data.hpp"
#include "semcast/metrics.hpp"

namespace semcast {

// Every recognised key with its default and a one-line description, in
// dump order. Keys are "section.name" (top-level keys have no section).
struct ConfigKey {
  std::string_view key;
  std::string_view default_value;
  std::string_view doc;
};
const std::vector<ConfigKey>& config_keys();

// Resolved key -> value text, always holding every key of config_keys().
class ConfigStore {
 public:
  ConfigStore();

  // Flat "key = value" lines with optional [section] headers and # comments,
  // or a JSON object (nested objects become dotted keys, arrays comma lists).
  // Throws ConfigError naming the line or key on unknown keys.
  void merge_text(std::string_view text, std::string_view origin = "<text>");
  void merge_file(const std::filesystem::path& path);
  // "key=value"
  void apply_override(std::string_view assignment);
  void set(std::string_view key, std::string value);

  const std::string& get(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::vector<std::string>& log() const { return log_; }

  // TOML-style dump of every resolved value.
  std::string dump() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> log_;
};

struct ReceiverConfig {
  TaskKind task = TaskKind::reconstruction;
  ChannelConfig channel;
  std::size_t hidden = 0;  // 0 = task default
};

enum class DataSource { mnist, synthetic };

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;

  DataSource data_source = DataSource::mnist;
  std::string mnist_dir;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  std::size_t synthetic_n = 0;
  std::size_t synthetic_test_n = 0;
  std::size_t synthetic_dim = 0;
  std::size_t synthetic_classes = 0;
  double synthetic_noise = 0.0;
  bool flip = false;

  std::size_t bits = 0;
  std::size_t encoder_hidden = 0;
  std::size_t latent = 0;
  std::size_t critic_hidden = 0;
  double log_sigma_init = 0.0;
  double log_sigma_min = -5.0;
  double log_sigma_max = 2.0;

  std::vector<ReceiverConfig> receivers;

  std::size_t batch = 0;
  std::size_t kappa = 0;
  std::size_t inner_steps = 0;
  std::size_t epochs = 0;
  std::size_t iters_per_epoch = 0;  // 0 = ceil(|train| / batch)
  double lr_decoder = 0.0;
  double lr_inner = 0.0;
  double lr_joint = 0.0;
  double lr_critic = 0.0;
  double beta = 0.0;
  double clip_eps = 0.0;
  double fallback_threshold = 0.0;
  bool aux = true;
  bool ew = false;
  ClassReward class_reward = ClassReward::probability;
  bool eval_sample = false;  // sample the policy at evaluation instead of using mu
  std::size_t heldout_batch = 0;
  std::size_t keep_checkpoints = 0;

  std::vector<double> snr_grid;
  std::string checkpoint;

  std::size_t synth_n_w = 0;
  std::size_t synth_n_theta = 0;
  std::size_t synth_iterations = 0;
  double synth_eta = 0.0;
  double synth_inner_lr = 0.0;
  std::size_t synth_inner_steps = 0;
  double synth_beta = 0.0;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

ExperimentConfig to_experiment(const ConfigStore& store);

}  // namespace semcast
