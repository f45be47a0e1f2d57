// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "routelab/moe.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "routelab/errors.hpp"

namespace routelab {

namespace {

constexpr std::uint64_t kRouterStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kExpertStream = 0xc2b2ae3d27d4eb4fULL;

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Mat gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  // Row-major fill keeps the draw order independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng) * scale;
  return m;
}

Vec gaussian_vec(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng) * scale;
  return v;
}

void softmax_columns(Mat& logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    const double peak = col.maxCoeff();
    col = (col.array() - peak).exp();
    col /= col.sum();
  }
}

struct ExpertCache {
  Mat z;    // pre-activation (hidden x n); empty for linear experts
  Mat a;    // activation (hidden x n)
  Mat out;  // expert output (o x n)
};

struct LayerCache {
  Mat input;  // d x n
  Mat gates;  // K x n
  std::vector<ExpertCache> experts;
};

struct BatchCache {
  std::vector<LayerCache> layers;
  Mat final_hidden;
  Vec output;
};

void expert_forward(const Expert& e, const Mat& h, ExpertCache& cache) {
  if (e.w1.size() == 0) {
    cache.out = (e.w2 * h).colwise() + e.b2;
    return;
  }
  cache.z = (e.w1 * h).colwise() + e.b1;
  cache.a = cache.z.cwiseMax(0.0);
  cache.out = (e.w2 * cache.a).colwise() + e.b2;
}

BatchCache run_forward(const MoEConfig& cfg, const MoEParams& p, const Mat& x) {
  require(static_cast<std::size_t>(x.rows()) == cfg.input_dim, "forward: input dimension mismatch");
  if (!x.allFinite()) throw ValidationError("forward: non-finite input");
  const auto n = x.cols();
  BatchCache cache;
  cache.layers.resize(cfg.num_layers);
  Mat h = x;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    LayerCache& lc = cache.layers[l];
    lc.input = h;
    lc.gates = p.routers[l] * h;
    softmax_columns(lc.gates);
    lc.experts.resize(cfg.num_experts);
    for (std::size_t k = 0; k < cfg.num_experts; ++k) expert_forward(p.experts[l][k], h, lc.experts[k]);
    if (cfg.scalar_experts()) {
      Vec out = Vec::Zero(n);
      for (std::size_t k = 0; k < cfg.num_experts; ++k)
        out.array() += lc.gates.row(k).transpose().array() * lc.experts[k].out.row(0).transpose().array();
      cache.output = out;
    } else {
      Mat next = h;
      for (std::size_t k = 0; k < cfg.num_experts; ++k)
        next.array() += lc.experts[k].out.array().rowwise() * lc.gates.row(k).array();
      h = std::move(next);
    }
  }
  if (!cfg.scalar_experts()) {
    cache.final_hidden = h;
    cache.output = (p.readout.transpose() * h).transpose().array() + p.readout_bias;
  }
  return cache;
}

// Backpropagates d(sum_i w_i F_i) through a cached batch.
MoEParams run_backward(const MoEConfig& cfg, const MoEParams& p, const BatchCache& cache, const Vec& w) {
  MoEParams grad = p.zeros_like();
  Mat dh;  // gradient flowing into the current layer's output
  if (!cfg.scalar_experts()) {
    grad.readout = cache.final_hidden * w;
    grad.readout_bias = w.sum();
    dh = p.readout * w.transpose();
  }
  for (std::size_t li = cfg.num_layers; li-- > 0;) {
    const LayerCache& lc = cache.layers[li];
    const auto n = lc.input.cols();
    Mat dgates(cfg.num_experts, n);
    Mat dinput = cfg.scalar_experts() ? Mat() : dh;
    for (std::size_t k = 0; k < cfg.num_experts; ++k) {
      const Expert& e = p.experts[li][k];
      Expert& ge = grad.experts[li][k];
      const ExpertCache& ec = lc.experts[k];
      Mat dout;
      if (cfg.scalar_experts()) {
        dgates.row(k) = (ec.out.row(0).array() * w.transpose().array()).matrix();
        dout = (lc.gates.row(k).array() * w.transpose().array()).matrix();
      } else {
        dgates.row(k) = (ec.out.array() * dh.array()).colwise().sum().matrix();
        dout = dh.array().rowwise() * lc.gates.row(k).array();
      }
      ge.b2 = dout.rowwise().sum();
      if (e.w1.size() == 0) {
        ge.w2 = dout * lc.input.transpose();
        if (!cfg.scalar_experts()) dinput.noalias() += e.w2.transpose() * dout;
      } else {
        ge.w2 = dout * ec.a.transpose();
        Mat dz = (e.w2.transpose() * dout).array() * (ec.z.array() > 0.0).cast<double>();
        ge.w1 = dz * lc.input.transpose();
        ge.b1 = dz.rowwise().sum();
        if (!cfg.scalar_experts()) dinput.noalias() += e.w1.transpose() * dz;
      }
    }
    // softmax Jacobian, column by column
    Mat dlogits = lc.gates.array() *
                  (dgates.array().rowwise() - (lc.gates.array() * dgates.array()).colwise().sum());
    grad.routers[li] = dlogits * lc.input.transpose();
    if (!cfg.scalar_experts()) {
      dinput.noalias() += p.routers[li].transpose() * dlogits;
      dh = std::move(dinput);
    }
  }
  return grad;
}

Expert make_expert(const MoEConfig& cfg, std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(cfg.input_dim);
  const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
  const auto o = static_cast<Eigen::Index>(cfg.expert_output_dim());
  const double a = cfg.expert_init_scale;
  Expert e;
  if (cfg.expert_kind == ExpertKind::kLinear) {
    e.w2 = gaussian(rng, o, d, a / std::sqrt(static_cast<double>(d)));
    e.b2 = gaussian_vec(rng, o, a / std::sqrt(static_cast<double>(d)));
    return e;
  }
  e.w1 = gaussian(rng, h, d, a / std::sqrt(static_cast<double>(d)));
  e.b1 = gaussian_vec(rng, h, a / std::sqrt(static_cast<double>(d)));
  e.w2 = gaussian(rng, o, h, a / std::sqrt(static_cast<double>(h)));
  e.b2 = gaussian_vec(rng, o, a / std::sqrt(static_cast<double>(h)));
  return e;
}

MoEParams make_params(const MoEConfig& cfg) {
  MoEParams p;
  auto router_rng = make_stream(cfg.router_seed.value_or(cfg.seed), kRouterStream);
  auto expert_rng = make_stream(cfg.seed, kExpertStream);
  const double router_scale = cfg.router_init_scale / std::sqrt(static_cast<double>(cfg.input_dim));
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    p.routers.push_back(gaussian(router_rng, static_cast<Eigen::Index>(cfg.num_experts),
                                 static_cast<Eigen::Index>(cfg.input_dim), router_scale));
    std::vector<Expert> layer;
    for (std::size_t k = 0; k < cfg.num_experts; ++k) layer.push_back(make_expert(cfg, expert_rng));
    p.experts.push_back(std::move(layer));
  }
  if (!cfg.scalar_experts()) {
    p.readout = gaussian_vec(expert_rng, static_cast<Eigen::Index>(cfg.input_dim),
                             cfg.expert_init_scale / std::sqrt(static_cast<double>(cfg.input_dim)));
    p.readout_bias = 0.0;
  }
  return p;
}

double flat_norm(const Expert& e) { return e.flatten().norm(); }

}  // namespace

void MoEConfig::validate() const {
  require(num_experts >= 1, "config: num_experts must be >= 1");
  require(input_dim >= 1, "config: input_dim must be >= 1");
  require(num_layers >= 1, "config: num_layers must be >= 1");
  require(expert_kind == ExpertKind::kLinear || hidden_dim >= 1, "config: hidden_dim must be >= 1");
  require(std::isfinite(router_init_scale) && router_init_scale > 0.0, "config: router_init_scale must be > 0");
  require(std::isfinite(expert_init_scale) && expert_init_scale > 0.0, "config: expert_init_scale must be > 0");
}

std::size_t Expert::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

Vec Expert::flatten() const {
  Vec flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < w1.rows(); ++r)
    for (Eigen::Index c = 0; c < w1.cols(); ++c) flat(i++) = w1(r, c);
  for (Eigen::Index r = 0; r < b1.size(); ++r) flat(i++) = b1(r);
  for (Eigen::Index r = 0; r < w2.rows(); ++r)
    for (Eigen::Index c = 0; c < w2.cols(); ++c) flat(i++) = w2(r, c);
  for (Eigen::Index r = 0; r < b2.size(); ++r) flat(i++) = b2(r);
  return flat;
}

void Expert::assign_flat(const Vec& flat) {
  require(static_cast<std::size_t>(flat.size()) == parameter_count(), "expert: flat size mismatch");
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < w1.rows(); ++r)
    for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = flat(i++);
  for (Eigen::Index r = 0; r < b1.size(); ++r) b1(r) = flat(i++);
  for (Eigen::Index r = 0; r < w2.rows(); ++r)
    for (Eigen::Index c = 0; c < w2.cols(); ++c) w2(r, c) = flat(i++);
  for (Eigen::Index r = 0; r < b2.size(); ++r) b2(r) = flat(i++);
}

MoEParams MoEParams::zeros_like() const {
  MoEParams z;
  for (const auto& r : routers) z.routers.push_back(Mat::Zero(r.rows(), r.cols()));
  for (const auto& layer : experts) {
    std::vector<Expert> zl;
    for (const auto& e : layer) {
      Expert ze;
      ze.w1 = Mat::Zero(e.w1.rows(), e.w1.cols());
      ze.b1 = Vec::Zero(e.b1.size());
      ze.w2 = Mat::Zero(e.w2.rows(), e.w2.cols());
      ze.b2 = Vec::Zero(e.b2.size());
      zl.push_back(std::move(ze));
    }
    z.experts.push_back(std::move(zl));
  }
  z.readout = Vec::Zero(readout.size());
  z.readout_bias = 0.0;
  return z;
}

void MoEParams::axpy(double alpha, const MoEParams& other, bool include_routers) {
  if (include_routers)
    for (std::size_t l = 0; l < routers.size(); ++l) routers[l] += alpha * other.routers[l];
  for (std::size_t l = 0; l < experts.size(); ++l) {
    for (std::size_t k = 0; k < experts[l].size(); ++k) {
      Expert& e = experts[l][k];
      const Expert& o = other.experts[l][k];
      if (e.w1.size() != 0) {
        e.w1 += alpha * o.w1;
        e.b1 += alpha * o.b1;
      }
      e.w2 += alpha * o.w2;
      e.b2 += alpha * o.b2;
    }
  }
  if (readout.size() != 0) {
    readout += alpha * other.readout;
    readout_bias += alpha * other.readout_bias;
  }
}

double MoEParams::squared_norm(bool include_routers) const {
  double s = 0.0;
  if (include_routers)
    for (const auto& r : routers) s += r.squaredNorm();
  for (const auto& layer : experts)
    for (const auto& e : layer) s += e.w1.squaredNorm() + e.b1.squaredNorm() + e.w2.squaredNorm() + e.b2.squaredNorm();
  s += readout.squaredNorm() + readout_bias * readout_bias;
  return s;
}

MoEModel::MoEModel(const MoEConfig& config) : config_(config) {
  config_.validate();
  params_ = make_params(config_);
  initial_ = params_;
}

MoEModel init_model(const MoEConfig& config) { return MoEModel(config); }

Vec forward_batch(const MoEModel& model, const Mat& x, std::vector<Mat>* gates) {
  BatchCache cache = run_forward(model.config(), model.params(), x);
  if (gates) {
    gates->clear();
    for (auto& lc : cache.layers) gates->push_back(std::move(lc.gates));
  }
  return cache.output;
}

Vec forward_batch_initial(const MoEModel& model, const Mat& x, std::vector<Mat>* gates) {
  BatchCache cache = run_forward(model.config(), model.initial_params(), x);
  if (gates) {
    gates->clear();
    for (auto& lc : cache.layers) gates->push_back(std::move(lc.gates));
  }
  return cache.output;
}

ForwardResult forward(const MoEModel& model, std::span<const double> x, const std::string& sample_id,
                      std::int64_t checkpoint_step) {
  require(x.size() == model.config().input_dim, "forward: input dimension mismatch");
  Mat col = Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
  std::vector<Mat> gates;
  Vec out = forward_batch(model, col, &gates);
  ForwardResult result;
  result.output = out(0);
  for (std::size_t l = 0; l < gates.size(); ++l) {
    RoutingRecord rec;
    rec.sample_id = sample_id;
    rec.checkpoint_step = checkpoint_step;
    rec.layer = l;
    rec.weights.assign(gates[l].data(), gates[l].data() + gates[l].rows());
    result.records.push_back(std::move(rec));
  }
  return result;
}

MoEParams output_gradient(const MoEModel& model, const Mat& x, const Vec& weight) {
  require(weight.size() == x.cols(), "output_gradient: weight length mismatch");
  BatchCache cache = run_forward(model.config(), model.params(), x);
  return run_backward(model.config(), model.params(), cache, weight);
}

std::string to_string(ParamType type) {
  switch (type) {
    case ParamType::kRouter: return "router";
    case ParamType::kExpert: return "expert";
    case ParamType::kOther: return "other";
  }
  return "other";
}

ParamType param_type_from_string(const std::string& name) {
  if (name == "router") return ParamType::kRouter;
  if (name == "expert") return ParamType::kExpert;
  if (name == "other") return ParamType::kOther;
  throw ValidationError("unknown parameter type '" + name + "'");
}

ParamNorms parameter_norms(const MoEModel& model) {
  const MoEParams& p = model.params();
  ParamNorms norms;
  for (const auto& r : p.routers) norms[ParamType::kRouter].push_back(r.norm());
  for (const auto& layer : p.experts)
    for (const auto& e : layer) norms[ParamType::kExpert].push_back(flat_norm(e));
  if (p.readout.size() != 0)
    norms[ParamType::kOther].push_back(std::sqrt(p.readout.squaredNorm() + p.readout_bias * p.readout_bias));
  return norms;
}

TrainingTrace train_experts(MoEModel& model, std::span<const Sample> train_set, const TrainHyper& hyper,
                            const CheckpointHook& on_checkpoint) {
  const MoEConfig& cfg = model.config();
  require(!train_set.empty(), "train_experts: empty training set");
  require(hyper.learning_rate > 0.0, "train_experts: learning rate must be > 0");
  require(!hyper.ridge || *hyper.ridge > 0.0, "train_experts: ridge must be > 0");
  require(hyper.weight_decay >= 0.0, "train_experts: weight decay must be >= 0");
  require(hyper.router_weight_decay.value_or(0.0) >= 0.0, "train_experts: router weight decay must be >= 0");
  require(hyper.router_lr_scale > 0.0, "train_experts: router_lr_scale must be > 0");
  const double router_decay = hyper.router_weight_decay.value_or(hyper.weight_decay);

  const auto n = static_cast<Eigen::Index>(train_set.size());
  Mat x(static_cast<Eigen::Index>(cfg.input_dim), n);
  Vec y(n);
  TrainingTrace trace;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = train_set[static_cast<std::size_t>(i)];
    require(static_cast<std::size_t>(s.x.size()) == cfg.input_dim, "train_experts: sample dimension mismatch");
    x.col(i) = s.x;
    y(i) = s.y;
    trace.sample_ids.push_back(s.id);
  }

  const std::size_t interval =
      hyper.checkpoint_interval > 0 ? hyper.checkpoint_interval : std::max<std::size_t>(1, hyper.steps / 20);
  const bool train_router = !cfg.router_frozen;
  const double nd = static_cast<double>(n);
  double lr = hyper.learning_rate;
  double previous_objective = std::numeric_limits<double>::infinity();

  auto objective_of = [&](const Vec& residual, const MoEParams& p) {
    double j = 0.5 * residual.squaredNorm() / nd;
    if (hyper.ridge) {
      MoEParams delta = p;
      delta.axpy(-1.0, model.initial_params(), train_router);
      j += 0.5 * (*hyper.ridge / nd) * delta.squared_norm(train_router);
    }
    if (hyper.weight_decay > 0.0) j += 0.5 * hyper.weight_decay * p.squared_norm(false);
    if (train_router && router_decay > 0.0)
      for (const auto& r : p.routers) j += 0.5 * router_decay * r.squaredNorm();
    return j;
  };

  auto record = [&](std::size_t step, const Vec& residual, double objective) {
    trace.steps.push_back(step);
    std::vector<double> losses(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) losses[static_cast<std::size_t>(i)] = residual(i) * residual(i);
    trace.sample_loss.push_back(std::move(losses));
    trace.objective.push_back(objective);
    trace.norms.push_back(parameter_norms(model));
    if (on_checkpoint) on_checkpoint(step, model);
  };

  for (std::size_t step = 0;; ++step) {
    BatchCache cache = run_forward(cfg, model.params(), x);
    Vec residual = cache.output - y;
    const double objective = objective_of(residual, model.params());
    if (!std::isfinite(objective)) {
      std::ostringstream msg;
      msg << "train_experts: objective diverged at step " << step << " (learning rate " << lr << ")";
      throw NumericalError(msg.str());
    }
    if (step % interval == 0 || step == hyper.steps) record(step, residual, objective);
    if (step == hyper.steps) break;

    if (hyper.halve_on_increase && objective > previous_objective) lr *= 0.5;
    previous_objective = objective;

    MoEParams grad = run_backward(cfg, model.params(), cache, residual / nd);
    if (hyper.ridge) {
      MoEParams delta = model.params();
      delta.axpy(-1.0, model.initial_params(), train_router);
      grad.axpy(*hyper.ridge / nd, delta, train_router);
    }
    if (hyper.weight_decay > 0.0) grad.axpy(hyper.weight_decay, model.params(), false);
    MoEParams& params = model.mutable_params();
    if (train_router) {
      for (std::size_t l = 0; l < params.routers.size(); ++l) {
        if (router_decay > 0.0) grad.routers[l] += router_decay * params.routers[l];
        params.routers[l] -= lr * hyper.router_lr_scale * grad.routers[l];
      }
    }
    params.axpy(-lr, grad, false);
  }
  trace.final_learning_rate = lr;
  return trace;
}

Vec initial_gates(const MoEModel& model, std::span<const double> x) {
  require(model.config().scalar_experts(), "ntk features are defined for one-layer models only");
  require(x.size() == model.config().input_dim, "ntk features: input dimension mismatch");
  Vec logits = model.initial_params().routers[0] * Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
  Mat m = logits;
  softmax_columns(m);
  return m.col(0);
}

std::vector<Vec> expert_gradient_blocks(const MoEModel& model, std::span<const double> x) {
  const MoEConfig& cfg = model.config();
  require(cfg.scalar_experts(), "ntk features are defined for one-layer models only");
  require(x.size() == cfg.input_dim, "ntk features: input dimension mismatch");
  const Eigen::Map<const Vec> h(x.data(), static_cast<Eigen::Index>(x.size()));
  std::vector<Vec> blocks;
  blocks.reserve(cfg.num_experts);
  for (const Expert& e : model.initial_params().experts[0]) {
    Expert g;
    if (e.w1.size() == 0) {
      g.w2 = h.transpose();
      g.b2 = Vec::Ones(1);
    } else {
      Vec z = e.w1 * h + e.b1;
      Vec active = (z.array() > 0.0).cast<double>();
      g.w2 = z.cwiseMax(0.0).transpose();
      g.b2 = Vec::Ones(1);
      Vec dz = e.w2.row(0).transpose().cwiseProduct(active);
      g.w1 = dz * h.transpose();
      g.b1 = dz;
    }
    blocks.push_back(g.flatten());
  }
  return blocks;
}

Vec ntk_features(const MoEModel& model, std::span<const double> x) {
  std::vector<Vec> blocks = expert_gradient_blocks(model, x);
  Vec g = initial_gates(model, x);
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.size();
  Vec phi(total);
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    phi.segment(offset, blocks[k].size()) = g(static_cast<Eigen::Index>(k)) * blocks[k];
    offset += blocks[k].size();
  }
  return phi;
}

std::map<ParamType, std::vector<double>> snapshot_param_dynamics(const std::vector<ParamNorms>& snapshots) {
  require(snapshots.size() >= 3, "snapshot_param_dynamics: need at least 3 snapshots");
  std::map<ParamType, std::vector<double>> changes;
  for (const auto& [type, first] : snapshots.front()) {
    const std::size_t tensors = first.size();
    double scale = 0.0;
    for (const auto& snap : snapshots) {
      auto it = snap.find(type);
      require(it != snap.end() && it->second.size() == tensors,
              "snapshot_param_dynamics: inconsistent tensors for type " + to_string(type));
      for (double v : it->second) scale += v;
    }
    scale /= static_cast<double>(tensors * snapshots.size());
    std::vector<double> series;
    for (std::size_t t = 0; t + 1 < snapshots.size(); ++t) {
      const auto& a = snapshots[t].at(type);
      const auto& b = snapshots[t + 1].at(type);
      double diff = 0.0;
      for (std::size_t i = 0; i < tensors; ++i) diff += std::abs(b[i] - a[i]);
      diff /= static_cast<double>(tensors);
      series.push_back(scale > 0.0 ? diff / scale : 0.0);
    }
    changes[type] = std::move(series);
  }
  return changes;
}

}  // namespace routelab
