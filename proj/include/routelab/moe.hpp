// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small, fully inspectable mixture-of-experts model.
//
// One-layer mode (num_layers == 1): every expert maps x -> scalar and the model
// output is F(x) = sum_k g_k(x) f_k(x) with g = softmax(W x).
//
// Multi-layer mode (num_layers > 1): every expert maps R^d -> R^d, blocks are
// stacked with a residual pass-through h_{l+1} = h_l + sum_k g_{l,k} f_{l,k}(h_l),
// and a linear readout produces the scalar output.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "routelab/linalg.hpp"

namespace routelab {

enum class ExpertKind { kReluMlp, kLinear };

struct MoEConfig {
  std::size_t num_experts = 16;
  std::size_t input_dim = 100;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 1;
  bool router_frozen = true;
  std::uint64_t seed = 0;
  // Router rows come from their own stream; unset means derive from `seed`.
  std::optional<std::uint64_t> router_seed;
  ExpertKind expert_kind = ExpertKind::kReluMlp;
  // Every parameter is N(0, 1) / sqrt(fan_in); the router additionally gets this factor.
  double router_init_scale = 1.0;
  // Extra factor on expert and readout initialization.
  double expert_init_scale = 1.0;

  void validate() const;
  bool scalar_experts() const { return num_layers == 1; }
  std::size_t expert_output_dim() const { return scalar_experts() ? 1 : input_dim; }
};

/// Two-layer ReLU network (w2 * relu(w1 h + b1) + b2), or affine map (w2 h + b2)
/// for linear experts, in which case w1 and b1 are empty.
struct Expert {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;

  std::size_t parameter_count() const;
  /// Flat layout: w1 row-major, b1, w2 row-major, b2.
  Vec flatten() const;
  void assign_flat(const Vec& flat);
};

struct MoEParams {
  std::vector<Mat> routers;                  // per layer, K x d
  std::vector<std::vector<Expert>> experts;  // [layer][expert]
  Vec readout;                               // multi-layer mode only
  double readout_bias = 0.0;

  /// Zero-valued copy with identical shapes.
  MoEParams zeros_like() const;
  void axpy(double alpha, const MoEParams& other, bool include_routers);
  double squared_norm(bool include_routers) const;
};

class MoEModel {
 public:
  explicit MoEModel(const MoEConfig& config);

  const MoEConfig& config() const { return config_; }
  const MoEParams& params() const { return params_; }
  MoEParams& mutable_params() { return params_; }
  /// Snapshot taken at initialization; nothing in the library writes to it.
  const MoEParams& initial_params() const { return initial_; }

 private:
  MoEConfig config_;
  MoEParams params_;
  MoEParams initial_;
};

/// Gate vector g for one (sample, layer); entries sum to one.
struct RoutingRecord {
  std::string sample_id;
  std::int64_t checkpoint_step = 0;
  std::size_t layer = 0;
  std::vector<double> weights;
};

struct ForwardResult {
  double output = 0.0;
  std::vector<RoutingRecord> records;  // one per layer
};

MoEModel init_model(const MoEConfig& config);

ForwardResult forward(const MoEModel& model, std::span<const double> x,
                      const std::string& sample_id = "", std::int64_t checkpoint_step = 0);

/// Batched forward: inputs are columns of `x`. Returns outputs and, if requested,
/// per-layer gate matrices (K x n).
Vec forward_batch(const MoEModel& model, const Mat& x, std::vector<Mat>* gates = nullptr);

/// Same as above but evaluated at the initialization snapshot.
Vec forward_batch_initial(const MoEModel& model, const Mat& x, std::vector<Mat>* gates = nullptr);

/// Gradient of sum_i weight_i * F(x_i) with respect to all parameters.
MoEParams output_gradient(const MoEModel& model, const Mat& x, const Vec& weight);

// ---------------------------------------------------------------------------
// Training

enum class ParamType { kRouter, kExpert, kOther };
std::string to_string(ParamType type);
ParamType param_type_from_string(const std::string& name);

using ParamNorms = std::map<ParamType, std::vector<double>>;

/// L2 norm of every parameter tensor, grouped by type. Router: one per layer;
/// expert: one per expert; other: the readout (multi-layer only).
ParamNorms parameter_norms(const MoEModel& model);

struct Sample {
  std::string id;
  Vec x;
  double y = 0.0;
  int cluster = -1;
};

struct TrainHyper {
  double learning_rate = 1e-2;
  std::size_t steps = 1000;
  // Adds (ridge / 2n) * ||theta - theta(0)||^2 over trainable parameters, so the
  // linearized minimizer is the kernel ridge solution with regularization `ridge`.
  std::optional<double> ridge;
  double weight_decay = 0.0;
  // Router-specific decay and step multiplier; unset decay means `weight_decay`.
  std::optional<double> router_weight_decay;
  double router_lr_scale = 1.0;
  // 0 selects every 5% of total steps.
  std::size_t checkpoint_interval = 0;
  bool halve_on_increase = true;
};

struct TrainingTrace {
  std::vector<std::size_t> steps;
  std::vector<std::vector<double>> sample_loss;  // [checkpoint][sample], squared error
  std::vector<double> objective;                 // [checkpoint]
  std::vector<ParamNorms> norms;                 // [checkpoint]
  std::vector<std::string> sample_ids;
  double final_learning_rate = 0.0;
};

using CheckpointHook = std::function<void(std::size_t step, const MoEModel& model)>;

/// Full-batch gradient descent on mean squared error. Expert (and readout)
/// parameters always train; routers train only when `router_frozen` is false.
TrainingTrace train_experts(MoEModel& model, std::span<const Sample> train_set,
                            const TrainHyper& hyper, const CheckpointHook& on_checkpoint = {});

// ---------------------------------------------------------------------------
// Neural tangent kernel features (one-layer mode only)

/// Per-expert gradient blocks d f_k / d phi_k at theta(0), without gate factors.
std::vector<Vec> expert_gradient_blocks(const MoEModel& model, std::span<const double> x);

/// Gate vector of the initialization-time router.
Vec initial_gates(const MoEModel& model, std::span<const double> x);

/// Phi(x) = grad_theta F(theta(0), x): concatenation of g_k(x) * d f_k / d phi_k.
Vec ntk_features(const MoEModel& model, std::span<const double> x);

/// Normalized change series per parameter type: c_t = mean_tensors |n_{t+1} - n_t| / mean scale.
std::map<ParamType, std::vector<double>> snapshot_param_dynamics(const std::vector<ParamNorms>& snapshots);

inline std::map<ParamType, std::vector<double>> snapshot_param_dynamics(const TrainingTrace& trace) {
  return snapshot_param_dynamics(trace.norms);
}

}  // namespace routelab
