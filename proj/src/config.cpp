// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (char c : key) out += c == '.' || c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, origin + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    require(!key.empty(), origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file '" + path + "'");
  return parse(in, path);
}

void RunConfig::apply_env(const std::vector<std::string>& known) {
  for (const auto& key : known)
    if (const char* v = std::getenv(env_name(key).c_str())) values_[key] = trim(v);
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ValidationError("config key '" + key + "': expected a number, got '" + it->second + "'");
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used, 0);
    if (used == it->second.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ValidationError("config key '" + key + "': expected an integer, got '" + it->second + "'");
}

std::uint64_t RunConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (!it->second.empty() && it->second.front() != '-') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(it->second, &used, 0);
      if (used == it->second.size()) return v;
    } catch (const std::logic_error&) {
    }
  }
  throw ValidationError("config key '" + key + "': expected a non-negative integer, got '" + it->second + "'");
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError("config key '" + key + "': expected a boolean, got '" + it->second + "'");
}

std::optional<double> RunConfig::get_optional_double(const std::string& key) const {
  if (!has(key) || values_.at(key).empty()) return std::nullopt;
  return get_double(key, 0.0);
}

std::vector<std::string> RunConfig::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  return out;
}

namespace {

void apply_model(const RunConfig& cfg, MoEConfig& m) {
  m.num_experts = cfg.get_uint("model.num_experts", m.num_experts);
  m.input_dim = cfg.get_uint("model.input_dim", m.input_dim);
  m.hidden_dim = cfg.get_uint("model.hidden_dim", m.hidden_dim);
  m.num_layers = cfg.get_uint("model.num_layers", m.num_layers);
  m.router_frozen = cfg.get_bool("model.router_frozen", m.router_frozen);
  m.seed = cfg.get_uint("model.seed", m.seed);
  if (cfg.has("model.router_seed")) m.router_seed = cfg.get_uint("model.router_seed", 0);
  const std::string kind = cfg.get_string("model.expert_kind", m.expert_kind == ExpertKind::kLinear ? "linear" : "relu_mlp");
  require(kind == "linear" || kind == "relu_mlp", "config key 'model.expert_kind': expected linear or relu_mlp");
  m.expert_kind = kind == "linear" ? ExpertKind::kLinear : ExpertKind::kReluMlp;
  m.router_init_scale = cfg.get_double("model.router_init_scale", m.router_init_scale);
  m.expert_init_scale = cfg.get_double("model.expert_init_scale", m.expert_init_scale);
}

void apply_data(const RunConfig& cfg, const MoEConfig& m, ClusterSpec& d) {
  d.dim = m.input_dim;
  d.num_clusters = cfg.get_uint("data.num_clusters", d.num_clusters);
  d.radius = cfg.get_double("data.radius", d.radius);
  d.stddev = cfg.get_double("data.stddev", d.stddev);
  d.offset = cfg.get_double("data.offset", d.offset);
  d.seed = cfg.get_uint("data.seed", d.seed);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "model.num_experts", "model.input_dim", "model.hidden_dim", "model.num_layers", "model.router_frozen",
      "model.seed", "model.router_seed", "model.expert_kind", "model.router_init_scale", "model.expert_init_scale",
      "data.num_clusters", "data.radius", "data.stddev", "data.offset", "data.seed",
      "train.learning_rate", "train.steps", "train.weight_decay", "train.router_weight_decay",
      "train.router_lr_scale", "train.checkpoint_interval", "train.ridge", "train.halve_on_increase",
      "demo.num_train", "demo.num_test", "demo.accuracy_tolerance", "demo.moving_average_window",
      "demo.embedding_dim", "demo.epsilon_grid_step", "demo.robustness_deltas",
      "tau", "epsilon", "delta", "permutation_seed",
      "study.num_samples", "study.train_fraction", "study.num_seeds", "study.first_router_seed",
      "study.train_steps", "study.learning_rate", "lambda", "lambda_relative",
      "kernel.sigma", "kernel.delta_conf", "kernel.router_seed",
      "output_dir"};
  return keys;
}

DemoConfig demo_config_from(const RunConfig& cfg) {
  DemoConfig c;
  apply_model(cfg, c.model);
  apply_data(cfg, c.model, c.data);
  c.train.learning_rate = cfg.get_double("train.learning_rate", c.train.learning_rate);
  c.train.steps = cfg.get_uint("train.steps", c.train.steps);
  c.train.weight_decay = cfg.get_double("train.weight_decay", c.train.weight_decay);
  if (cfg.has("train.router_weight_decay")) c.train.router_weight_decay = cfg.get_optional_double("train.router_weight_decay");
  c.train.router_lr_scale = cfg.get_double("train.router_lr_scale", c.train.router_lr_scale);
  c.train.checkpoint_interval = cfg.get_uint("train.checkpoint_interval", c.train.checkpoint_interval);
  if (cfg.has("train.ridge")) c.train.ridge = cfg.get_optional_double("train.ridge");
  c.train.halve_on_increase = cfg.get_bool("train.halve_on_increase", c.train.halve_on_increase);
  c.num_train = cfg.get_uint("demo.num_train", c.num_train);
  c.num_test = cfg.get_uint("demo.num_test", c.num_test);
  c.accuracy_tolerance = cfg.get_double("demo.accuracy_tolerance", c.accuracy_tolerance);
  c.moving_average_window = cfg.get_uint("demo.moving_average_window", c.moving_average_window);
  c.embedding_dim = cfg.get_uint("demo.embedding_dim", c.embedding_dim);
  c.epsilon_grid_step = cfg.get_double("demo.epsilon_grid_step", c.epsilon_grid_step);
  if (cfg.has("demo.robustness_deltas")) {
    c.robustness_deltas.clear();
    std::string list = cfg.get_string("demo.robustness_deltas", "");
    std::size_t start = 0;
    while (start <= list.size()) {
      const std::size_t end = std::min(list.find(',', start), list.size());
      RunConfig one;
      one.set("delta", trim(list.substr(start, end - start)));
      c.robustness_deltas.push_back(one.get_double("delta", 0.0));
      start = end + 1;
    }
  }
  c.tau = cfg.get_double("tau", c.tau);
  if (cfg.has("epsilon")) c.epsilon = cfg.get_optional_double("epsilon");
  c.delta = cfg.get_double("delta", c.delta);
  c.permutation_seed = cfg.get_uint("permutation_seed", c.permutation_seed);
  c.validate();
  return c;
}

StudyConfig study_config_from(const RunConfig& cfg) {
  StudyConfig c;
  apply_model(cfg, c.model);
  apply_data(cfg, c.model, c.data);
  c.num_samples = cfg.get_uint("study.num_samples", c.num_samples);
  c.train_fraction = cfg.get_double("study.train_fraction", c.train_fraction);
  c.num_seeds = cfg.get_uint("study.num_seeds", c.num_seeds);
  c.first_router_seed = cfg.get_uint("study.first_router_seed", c.first_router_seed);
  c.train_steps = cfg.get_uint("study.train_steps", c.train_steps);
  c.learning_rate = cfg.get_double("study.learning_rate", c.learning_rate);
  c.tau = cfg.get_double("tau", c.tau);
  c.lambda = cfg.get_double("lambda", c.lambda);
  c.lambda_relative = cfg.get_bool("lambda_relative", c.lambda_relative);
  c.validate();
  return c;
}

KernelSettings kernel_settings_from(const RunConfig& cfg) {
  KernelSettings k;
  k.sigma = cfg.get_double("kernel.sigma", k.sigma);
  k.delta_conf = cfg.get_double("kernel.delta_conf", k.delta_conf);
  k.router_seed = cfg.get_uint("kernel.router_seed", k.router_seed);
  require(k.sigma >= 0.0, "kernel.sigma must be >= 0");
  require(k.delta_conf > 0.0 && k.delta_conf < 1.0, "kernel.delta_conf must lie in (0, 1)");
  return k;
}

}  // namespace routelab
