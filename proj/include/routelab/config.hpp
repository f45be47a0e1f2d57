// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value configuration. Lines starting with '#' are comments. Every key
// can be overridden by an environment variable named ROUTELAB_<KEY> with the key
// upper-cased and '.' replaced by '_' (e.g. ROUTELAB_MODEL_NUM_EXPERTS).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "routelab/demo.hpp"
#include "routelab/study.hpp"

namespace routelab {

inline constexpr const char* kEnvPrefix = "ROUTELAB_";

class RunConfig {
 public:
  static RunConfig parse(std::istream& in, const std::string& origin = "<config>");
  static RunConfig load(const std::string& path);

  /// Applies ROUTELAB_* overrides for every key in `known`.
  void apply_env(const std::vector<std::string>& known);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;

  /// Keys that were set but are not in `known`; callers treat these as typos.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string env_name(const std::string& key);

/// Every documented key; see README for meanings and defaults.
const std::vector<std::string>& config_keys();

/// Start from the demo (or study) defaults and apply every key that is set.
DemoConfig demo_config_from(const RunConfig& cfg);
StudyConfig study_config_from(const RunConfig& cfg);

/// Kernel subcommand settings on top of the study model and data.
struct KernelSettings {
  double sigma = 0.1;
  double delta_conf = 0.05;
  std::uint64_t router_seed = 1;
};
KernelSettings kernel_settings_from(const RunConfig& cfg);

}  // namespace routelab
