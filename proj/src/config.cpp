#include "semcast/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semcast/error.hpp"

namespace semcast {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "1", "master seed; every random stream derives from it"},
      {"threads", "0", "OpenMP threads for the dense kernels (0 = runtime default; SEMCAST_THREADS overrides)"},
      {"out", "runs/semcast", "output directory"},

      {"data.source", "mnist", "mnist | synthetic"},
      {"data.mnist_dir", "data/mnist-subset", "directory holding the four IDX files"},
      {"data.train_limit", "0", "keep the first N training samples (0 = all)"},
      {"data.test_limit", "0", "keep the first N test samples (0 = all)"},
      {"data.synthetic_n", "2000", "synthetic training samples"},
      {"data.synthetic_test_n", "500", "synthetic test samples"},
      {"data.synthetic_dim", "64", "synthetic sample dimension"},
      {"data.synthetic_classes", "10", "synthetic class count"},
      {"data.synthetic_noise", "0.05", "synthetic per-pixel noise std"},
      {"data.flip", "false", "random horizontal flip of square training images"},

      {"model.bits", "128", "B, transmitted bits per image"},
      {"model.encoder_hidden", "256", "encoder hidden width"},
      {"model.latent", "128", "semantic state dimension"},
      {"model.critic_hidden", "64", "critic hidden width"},
      {"model.log_sigma_init", "0", "initial bias of the log-sigma head"},
      {"model.log_sigma_min", "-5", "lower clamp of log-sigma"},
      {"model.log_sigma_max", "2", "upper clamp of log-sigma"},

      {"receivers.tasks", "reconstruction,classification", "task per receiver"},
      {"receivers.channels", "awgn,awgn", "channel kind per receiver (awgn | rayleigh | rician)"},
      {"receivers.snr_db", "4,4", "training SNR per receiver in dB (inf = noiseless)"},
      {"receivers.rician_k", "3", "Rician K factor (one value or one per receiver)"},
      {"receivers.hidden", "0,0", "decoder hidden width per receiver (0 = 256 reconstruction, 32 classification)"},

      {"train.batch", "64", "T, samples per mini-batch"},
      {"train.kappa", "100", "decoder steps per update cycle"},
      {"train.inner_steps", "5", "H, encoder inner steps"},
      {"train.epochs", "71", "training epochs"},
      {"train.iters_per_epoch", "0", "update cycles per epoch (0 = ceil(|train| / batch))"},
      {"train.lr_decoder", "1e-3", "decoder SGD learning rate"},
      {"train.lr_inner", "1e-3", "encoder inner-descent learning rate"},
      {"train.lr_joint", "1e-3", "eta, joint (w, theta) step size"},
      {"train.lr_critic", "1e-3", "critic learning rate"},
      {"train.beta", "0.5", "control barrier rho = beta |grad g|^2"},
      {"train.clip_eps", "0.2", "PPO clip epsilon"},
      {"train.fallback_threshold", "1e-12", "|grad g| at or below which lambda falls back to 0"},
      {"train.aux", "true", "include the auxiliary decoder losses in the TX loss"},
      {"train.ew", "false", "equal-weight ablation: w fixed at 1/N, no weight assignment"},
      {"train.class_reward", "probability", "classification reward: probability | indicator"},
      {"train.policy_eval", "mean", "policy at evaluation and held-out metrics: mean | sample"},
      {"train.heldout_batch", "0", "held-out samples per trace row (0 = batch)"},
      {"train.keep_checkpoints", "0", "epoch checkpoints kept on disk (0 = all)"},

      {"eval.snr_grid", "-4,0,4,8,12,inf", "evaluation SNRs in dB"},
      {"eval.checkpoint", "", "checkpoint directory for eval (empty = <out>/final)"},

      {"synth.n_w", "3", "synthetic benchmark weight dimension"},
      {"synth.n_theta", "5", "synthetic benchmark theta dimension"},
      {"synth.iterations", "400", "synthetic benchmark iterations"},
      {"synth.eta", "1e-2", "synthetic benchmark joint step"},
      {"synth.inner_lr", "0.1", "synthetic benchmark inner learning rate"},
      {"synth.inner_steps", "5", "synthetic benchmark inner steps"},
      {"synth.beta", "0.5", "synthetic benchmark barrier coefficient"},
  };
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

// TOML arrays [a, b] become "a,b".
std::string normalize_value(std::string v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') {
    std::string out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!out.empty()) out += ',';
      out += unquote(trim(item));
    }
    return out;
  }
  return unquote(v);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) {
      flatten_json(v, key, out);
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) {
        if (!joined.empty()) joined += ',';
        joined += e.is_string() ? e.get<std::string>() : e.dump();
      }
      out.emplace_back(key, joined);
    } else {
      out.emplace_back(key, v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "inf" || t == "+inf") return INFINITY;
  if (t == "-inf") return -INFINITY;
  double out = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

ConfigStore::ConfigStore() {
  for (const auto& k : config_keys()) entries_.emplace_back(std::string(k.key), std::string(k.default_value));
}

void ConfigStore::set(std::string_view key, std::string value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

const std::string& ConfigStore::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void ConfigStore::merge_text(std::string_view text, std::string_view origin) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(origin) + ": " + e.what());
    }
    std::vector<std::pair<std::string, std::string>> flat;
    flatten_json(j, "", flat);
    for (auto& [k, v] : flat) {
      try {
        set(k, v);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(origin) + ": " + e.what());
      }
    }
    return;
  }

  std::string section;
  std::stringstream ss{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(ss, line); ++lineno) {
    const std::string t = trim(strip_comment(line));
    if (t.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      set(full, normalize_value(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void ConfigStore::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str(), path.string());
}

void ConfigStore::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not KEY=VALUE");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = normalize_value(std::string(assignment.substr(eq + 1)));
  const std::string before = get(key);
  set(key, value);
  log_.push_back("override " + key + ": " + before + " -> " + value);
}

std::string ConfigStore::dump() const {
  std::ostringstream os;
  std::string section;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [key, value] = entries_[i];
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << name << " = \"" << value << "\"  # " << config_keys()[i].doc << '\n';
  }
  return os.str();
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(bits > 0, "model.bits must be positive");
  require(batch > 0, "train.batch must be positive");
  require(inner_steps >= 1 || ew, "train.inner_steps must be >= 1");
  require(epochs > 0, "train.epochs must be positive");
  require(!receivers.empty(), "at least one receiver is required");
  require(log_sigma_min < log_sigma_max, "model.log_sigma_min must be below model.log_sigma_max");
  require(clip_eps > 0.0 && clip_eps < 1.0, "train.clip_eps must lie in (0, 1)");
  require(beta >= 0.0, "train.beta must be non-negative");
  for (double lr : {lr_decoder, lr_inner, lr_joint, lr_critic})
    require(lr >= 0.0 && std::isfinite(lr), "learning rates must be finite and non-negative");
  for (const auto& r : receivers) r.channel.validate();
  require(!snr_grid.empty(), "eval.snr_grid must not be empty");
}

ExperimentConfig to_experiment(const ConfigStore& s) {
  auto str = [&](const char* k) { return s.get(k); };
  auto num = [&](const char* k) { return parse_double(k, s.get(k)); };
  auto uint = [&](const char* k) { return static_cast<std::size_t>(parse_uint(k, s.get(k))); };
  auto flag = [&](const char* k) { return parse_bool(k, s.get(k)); };

  ExperimentConfig c;
  c.seed = parse_uint("seed", s.get("seed"));
  c.threads = static_cast<int>(uint("threads"));
  c.out = str("out");

  const auto src = str("data.source");
  if (src == "mnist") c.data_source = DataSource::mnist;
  else if (src == "synthetic") c.data_source = DataSource::synthetic;
  else throw ConfigError("data.source: expected mnist or synthetic, got '" + src + "'");
  c.mnist_dir = str("data.mnist_dir");
  c.train_limit = uint("data.train_limit");
  c.test_limit = uint("data.test_limit");
  c.synthetic_n = uint("data.synthetic_n");
  c.synthetic_test_n = uint("data.synthetic_test_n");
  c.synthetic_dim = uint("data.synthetic_dim");
  c.synthetic_classes = uint("data.synthetic_classes");
  c.synthetic_noise = num("data.synthetic_noise");
  c.flip = flag("data.flip");

  c.bits = uint("model.bits");
  c.encoder_hidden = uint("model.encoder_hidden");
  c.latent = uint("model.latent");
  c.critic_hidden = uint("model.critic_hidden");
  c.log_sigma_init = num("model.log_sigma_init");
  c.log_sigma_min = num("model.log_sigma_min");
  c.log_sigma_max = num("model.log_sigma_max");

  const auto tasks = split_list(str("receivers.tasks"));
  const auto kinds = split_list(str("receivers.channels"));
  const auto snrs = split_list(str("receivers.snr_db"));
  const auto ks = split_list(str("receivers.rician_k"));
  const auto hidden = split_list(str("receivers.hidden"));
  auto pick = [&](const std::vector<std::string>& v, std::size_t n, const char* key) -> const std::string& {
    if (v.size() == 1) return v[0];
    if (v.size() != tasks.size())
      throw ConfigError(std::string(key) + " needs one value or one per receiver (" + std::to_string(tasks.size()) + ")");
    return v[n];
  };
  for (std::size_t n = 0; n < tasks.size(); ++n) {
    ReceiverConfig r;
    r.task = parse_task_kind(tasks[n]);
    r.channel.kind = parse_channel_kind(pick(kinds, n, "receivers.channels"));
    r.channel.snr_db = parse_double("receivers.snr_db", pick(snrs, n, "receivers.snr_db"));
    r.channel.rician_k = parse_double("receivers.rician_k", pick(ks, n, "receivers.rician_k"));
    r.hidden = static_cast<std::size_t>(parse_uint("receivers.hidden", pick(hidden, n, "receivers.hidden")));
    c.receivers.push_back(r);
  }

  c.batch = uint("train.batch");
  c.kappa = uint("train.kappa");
  c.inner_steps = uint("train.inner_steps");
  c.epochs = uint("train.epochs");
  c.iters_per_epoch = uint("train.iters_per_epoch");
  c.lr_decoder = num("train.lr_decoder");
  c.lr_inner = num("train.lr_inner");
  c.lr_joint = num("train.lr_joint");
  c.lr_critic = num("train.lr_critic");
  c.beta = num("train.beta");
  c.clip_eps = num("train.clip_eps");
  c.fallback_threshold = num("train.fallback_threshold");
  c.aux = flag("train.aux");
  c.ew = flag("train.ew");
  const auto cr = str("train.class_reward");
  if (cr == "probability") c.class_reward = ClassReward::probability;
  else if (cr == "indicator") c.class_reward = ClassReward::indicator;
  else throw ConfigError("train.class_reward: expected probability or indicator, got '" + cr + "'");
  const auto pe = str("train.policy_eval");
  if (pe != "mean" && pe != "sample") throw ConfigError("train.policy_eval: expected mean or sample, got '" + pe + "'");
  c.eval_sample = pe == "sample";
  c.heldout_batch = uint("train.heldout_batch");
  c.keep_checkpoints = uint("train.keep_checkpoints");

  for (const auto& v : split_list(str("eval.snr_grid"))) c.snr_grid.push_back(parse_double("eval.snr_grid", v));
  c.checkpoint = str("eval.checkpoint");

  c.synth_n_w = uint("synth.n_w");
  c.synth_n_theta = uint("synth.n_theta");
  c.synth_iterations = uint("synth.iterations");
  c.synth_eta = num("synth.eta");
  c.synth_inner_lr = num("synth.inner_lr");
  c.synth_inner_steps = uint("synth.inner_steps");
  c.synth_beta = num("synth.beta");
  c.validate();
  return c;
}

}  // namespace semcast
