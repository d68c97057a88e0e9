/*
 * Copyright 2026 The gaitphase Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gaitphase/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "gaitphase/error.hpp"
#include "gaitphase/ops.hpp"
#include "gaitphase/random.hpp"

namespace gaitphase {
namespace {

const char* to_string(SpatialInput v) { return v == SpatialInput::kVelocity ? "velocity" : "position"; }
const char* to_string(ReconTarget v) { return v == ReconTarget::kVelocity ? "velocity" : "position"; }
const char* to_string(FusionSource v) { return v == FusionSource::kPhaseParams ? "phase_params" : "latent"; }

template <class E>
E parse_enum(const std::string& text, const char* first_name, E first, const char* second_name, E second,
             const char* field) {
  if (text == first_name) return first;
  if (text == second_name) return second;
  throw UsageError(std::string("model config: bad ") + field + " '" + text + "'");
}

std::string layer_name(std::size_t layer) { return "gcl" + std::to_string(layer); }

}  // namespace

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("model config: ") + what);
  };
  require(layers >= 1, "layers must be >= 1");
  require(hidden >= 1, "hidden must be >= 1");
  require(channels >= 1, "channels must be >= 1");
  require(window >= 4, "window must be >= 4");
  require(classes >= 2, "classes must be >= 2");
  require(joints == 17, "only the 17-joint convention is supported");
  require(fusion_dim >= 1, "fusion_dim must be >= 1");
  require(compactor_hidden >= 1, "compactor_hidden must be >= 1");
  require(kernel % 2 == 1, "kernel must be odd");
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["layers"] = c.layers;
  j["hidden"] = c.hidden;
  j["channels"] = c.channels;
  j["window"] = c.window;
  j["classes"] = c.classes;
  j["joints"] = c.joints;
  j["fusion_dim"] = c.fusion_dim;
  j["compactor_hidden"] = c.compactor_hidden;
  j["kernel"] = c.kernel;
  j["use_temporal"] = c.use_temporal;
  j["residual"] = c.residual;
  j["lambda"] = c.lambda;
  j["seed"] = c.seed;
  j["spatial_input"] = to_string(c.spatial_input);
  j["recon_target"] = to_string(c.recon_target);
  j["fusion_source"] = to_string(c.fusion_source);
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.layers = j.at("layers").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.window = j.at("window").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.joints = j.at("joints").get<std::size_t>();
    c.fusion_dim = j.at("fusion_dim").get<std::size_t>();
    c.compactor_hidden = j.at("compactor_hidden").get<std::size_t>();
    c.kernel = j.at("kernel").get<std::size_t>();
    c.use_temporal = j.at("use_temporal").get<bool>();
    c.residual = j.at("residual").get<bool>();
    c.lambda = j.at("lambda").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.spatial_input = parse_enum(j.at("spatial_input").get<std::string>(), "velocity", SpatialInput::kVelocity,
                                 "position", SpatialInput::kPosition, "spatial_input");
    c.recon_target = parse_enum(j.at("recon_target").get<std::string>(), "velocity", ReconTarget::kVelocity,
                                "position", ReconTarget::kPosition, "recon_target");
    c.fusion_source = parse_enum(j.at("fusion_source").get<std::string>(), "phase_params",
                                 FusionSource::kPhaseParams, "latent", FusionSource::kLatent, "fusion_source");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Batch make_batch(const ModelConfig& config, const MultiScaleGraph& graph, std::span<const GaitWindow* const> windows,
                 std::span<const int> labels) {
  if (windows.empty()) throw UsageError("make_batch: no windows");
  if (!labels.empty() && labels.size() != windows.size()) throw ShapeError("make_batch: label count mismatch");
  const std::size_t batch = windows.size();
  const std::size_t len = config.window;
  const std::size_t d = config.dims();
  const std::size_t fine = graph.fine_count();
  const std::size_t nodes = graph.node_count();
  Batch out;
  out.velocity = NDArray({batch, d, len});
  out.node_input = NDArray({batch, nodes, 3 * len});
  out.recon_target = NDArray({batch, d, len});
  out.labels.assign(labels.begin(), labels.end());

  for (std::size_t b = 0; b < batch; ++b) {
    const NDArray& frames = windows[b]->frames;
    if (frames.rank() != 2 || frames.dim(0) != len + 1 || frames.dim(1) != d) {
      throw ShapeError("make_batch: window frames " + shape_str(frames.shape()) + ", expected (" +
                       std::to_string(len + 1) + "," + std::to_string(d) + ")");
    }
    const NDArray velocity = compute_velocity(frames);  // (T, d)
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t i = 0; i < d; ++i) {
        out.velocity[(b * d + i) * len + t] = velocity[t * d + i];
        out.recon_target[(b * d + i) * len + t] = config.recon_target == ReconTarget::kVelocity
                                                       ? velocity[t * d + i]
                                                       : frames[(t + 1) * d + i] - frames[i];
      }

    // Per-node trajectories (T, R1, 3) -> coarse nodes by averaging.
    NDArray fine_traj({len, fine, 3});
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t i = 0; i < d; ++i) {
        fine_traj[t * d + i] =
            config.spatial_input == SpatialInput::kVelocity ? velocity[t * d + i] : frames[(t + 1) * d + i];
      }
    const NDArray coarse_traj = coarsen(graph, fine_traj);
    const std::size_t coarse = graph.coarse_count();
    double* dst = out.node_input.raw() + b * nodes * 3 * len;
    for (std::size_t node = 0; node < nodes; ++node)
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t a = 0; a < 3; ++a) {
          dst[node * 3 * len + t * 3 + a] = node < fine ? fine_traj[(t * fine + node) * 3 + a]
                                                        : coarse_traj[(t * coarse + (node - fine)) * 3 + a];
        }
  }
  return out;
}

GaitModel::GaitModel(ModelConfig config) : config_(std::move(config)), graph_(build_multiscale_graph()) {
  config_.validate();
  const std::size_t nodes = graph_.node_count();
  const std::size_t len = config_.window;
  Rng rng(derive_seed(config_.seed, 0));

  PeriodicConfig pc;
  pc.dims = config_.dims();
  pc.channels = config_.channels;
  pc.hidden = config_.compactor_hidden;
  pc.kernel = config_.kernel;
  pc.window = len;
  init_periodic(params_, pc, rng);

  const double stem_bound = 1.0 / std::sqrt(static_cast<double>(3 * len));
  params_.add("stem.weight", uniform_array({config_.hidden, 3 * len}, stem_bound, rng));
  params_.add("stem.bias", uniform_array({config_.hidden}, stem_bound, rng));
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
  for (std::size_t l = 1; l <= config_.layers; ++l) {
    params_.add(layer_name(l) + ".adjacency", init_adjacency(nodes, derive_seed(config_.seed, 100 + l)));
    params_.add(layer_name(l) + ".weight", uniform_array({config_.hidden, config_.hidden}, hidden_bound, rng));
  }

  const std::size_t descriptor = config_.fusion_source == FusionSource::kPhaseParams ? 5 * config_.channels
                                                                                      : config_.channels * len;
  const double fusion_bound = 1.0 / std::sqrt(static_cast<double>(descriptor));
  params_.add("fusion.weight", uniform_array({config_.fusion_dim, descriptor}, fusion_bound, rng));
  params_.add("fusion.bias", uniform_array({config_.fusion_dim}, fusion_bound, rng));

  params_.add("head.adjacency", init_adjacency(nodes, derive_seed(config_.seed, 99)));
  params_.add("head.weight", uniform_array({config_.hidden, config_.fused_width()},
                                           1.0 / std::sqrt(static_cast<double>(config_.fused_width())), rng));
  params_.add("classifier.weight", uniform_array({config_.classes, config_.hidden}, hidden_bound, rng));
  params_.add("classifier.bias", uniform_array({config_.classes}, hidden_bound, rng));
}

const NDArray& GaitModel::adjacency(std::size_t layer) const {
  if (layer < 1 || layer > config_.layers) {
    throw UsageError("layer " + std::to_string(layer) + " out of range; valid layers are 1.." +
                     std::to_string(config_.layers));
  }
  return params_.get(layer_name(layer) + ".adjacency").value;
}

Var spatial_branch(ParamBinder& bind, const ModelConfig& config, Var node_input) {
  Var h = ops::linear(node_input, bind("stem.weight"), bind("stem.bias"));
  for (std::size_t l = 1; l <= config.layers; ++l) {
    h = mgd_gcl_forward(h, bind(layer_name(l) + ".adjacency"), bind(layer_name(l) + ".weight"), Activation::kTanh,
                        config.residual);
  }
  return h;
}

Var fuse(ParamBinder& bind, const ModelConfig& config, Var node_features, const PeriodicOutput* periodic) {
  Tape& tape = bind.tape();
  const Shape& s = node_features.shape();
  if (s.size() != 3) throw ShapeError("fuse: node features must be (B,n,c), got " + shape_str(s));
  const std::size_t batch = s[0];
  const std::size_t nodes = s[1];
  Var block;
  if (config.use_temporal) {
    if (!periodic) throw UsageError("fuse: temporal branch enabled but no periodic output given");
    Var descriptor;
    if (config.fusion_source == FusionSource::kPhaseParams) {
      Var angle = ops::scale(periodic->phase, 2.0 * std::numbers::pi);
      const Var parts[] = {periodic->amplitude, periodic->frequency, periodic->offset, ops::sin(angle),
                           ops::sin(ops::shift(angle, std::numbers::pi / 2.0))};
      descriptor = ops::concat(parts, 1);  // (B, 5K)
    } else {
      const Shape& ls = periodic->reconstructed_latent.shape();
      descriptor = ops::reshape(periodic->reconstructed_latent, {ls[0], ls[1] * ls[2]});
    }
    if (descriptor.shape()[0] != batch) throw ShapeError("fuse: batch mismatch between branches");
    Var projected = ops::linear(descriptor, bind("fusion.weight"), bind("fusion.bias"));  // (B, F)
    block = ops::add(tape.constant(NDArray({batch, nodes, config.fusion_dim})),
                     ops::reshape(projected, {batch, 1, config.fusion_dim}));
  } else {
    block = tape.constant(NDArray({batch, nodes, config.fusion_dim}));
  }
  const Var parts[] = {node_features, block};
  return ops::concat(parts, 2);
}

Var classify_logits(ParamBinder& bind, const ModelConfig& config, Var fused) {
  if (config.classes < 2) throw UsageError("classify: need at least 2 classes");
  Var h = mgd_gcl_forward(fused, bind("head.adjacency"), bind("head.weight"), Activation::kTanh, false);
  Var pooled = ops::mean(h, 1);
  return ops::linear(pooled, bind("classifier.weight"), bind("classifier.bias"));
}

Var loss_mse(Var reconstructed, Var target, std::size_t feature_axis) {
  const Shape& a = reconstructed.shape();
  if (a != target.shape()) {
    throw ShapeError("loss_mse: " + shape_str(a) + " vs " + shape_str(target.shape()));
  }
  if (feature_axis >= a.size()) throw ShapeError("loss_mse: feature axis out of range for " + shape_str(a));
  const std::size_t frames = shape_size(a) / a[feature_axis];
  return ops::scale(ops::sum_all(ops::square(ops::sub(target, reconstructed))), 1.0 / static_cast<double>(frames));
}

NDArray one_hot(std::span<const int> labels, std::size_t classes) {
  NDArray out({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(classes) + ")");
    }
    out[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return out;
}

Var loss_ce(Var logits, const NDArray& target) {
  const Shape& s = logits.shape();
  if (s.size() != 2 || target.shape() != s) {
    throw ShapeError("loss_ce: logits " + shape_str(s) + " target " + shape_str(target.shape()));
  }
  for (std::size_t r = 0; r < s[0]; ++r) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < s[1]; ++c) {
      const double v = target[r * s[1] + c];
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = 2;
      }
    }
    if (ones != 1) throw UsageError("loss_ce: target row " + std::to_string(r) + " is not one-hot");
  }
  Tape& tape = *logits.tape;
  Var picked = ops::sum_all(ops::mul(ops::log_softmax(logits), tape.constant(target)));
  return ops::scale(picked, -1.0 / static_cast<double>(s[0]));
}

Var total_loss(Var ce, Var mse, double lambda) {
  if (!(lambda >= 0.0)) throw UsageError("total_loss: lambda must be >= 0");
  return ops::add(ce, ops::scale(mse, lambda));
}

ForwardResult GaitModel::forward(ParamBinder& bind, const Batch& batch, bool with_loss) const {
  Tape& tape = bind.tape();
  ForwardResult r;
  Var velocity = tape.constant(batch.velocity);
  r.periodic = periodic_forward(bind, velocity);
  r.node_features = spatial_branch(bind, config_, tape.constant(batch.node_input));
  r.fused = fuse(bind, config_, r.node_features, &r.periodic);
  r.logits = classify_logits(bind, config_, r.fused);
  r.probabilities = ops::softmax(r.logits);
  if (with_loss && !batch.labels.empty()) {
    r.ce = loss_ce(r.logits, one_hot(batch.labels, config_.classes));
    Var reconstructed = config_.recon_target == ReconTarget::kVelocity ? r.periodic.restored
                                                                       : ops::cumsum(r.periodic.restored, 2);
    r.mse = loss_mse(reconstructed, tape.constant(batch.recon_target), 1);
    r.total = total_loss(r.ce, r.mse, config_.lambda);
  }
  return r;
}

NDArray GaitModel::predict_proba(const Batch& batch) const {
  Tape tape;
  ParamBinder bind(tape, params_);
  return forward(bind, batch, false).probabilities.value();
}

std::vector<PhaseParams> GaitModel::phase_params(const Batch& batch) const {
  Tape tape;
  ParamBinder bind(tape, params_);
  return extract_phase_params(periodic_forward(bind, tape.constant(batch.velocity)));
}

// ---- checkpoints ------------------------------------------------------------

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrorKind::kTruncated,
                            std::string("file ends inside ") + what + " at byte " + std::to_string(pos_));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'G', 'P', 'H', 'Z'};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const GaitModel& model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str(to_json(model.config()).dump());
  w.u32(static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    w.str(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) w.u64(d);
    for (double v : p->value.data()) w.f64(v);
  }
  return w.take();
}

GaitModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw CheckpointError(CheckpointErrorKind::kTruncated, "file shorter than the magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(CheckpointErrorKind::kBadMagic, "not a GPHZ checkpoint");
  }
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorKind::kVersionMismatch,
                          "file version " + std::to_string(version) + ", this build reads " +
                              std::to_string(kCheckpointVersion));
  }
  const std::string config_text = r.str("config");
  nlohmann::json config_json;
  try {
    config_json = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointErrorKind::kCorrupt, std::string("config: ") + e.what());
  }
  ModelConfig config;
  try {
    config = model_config_from_json(config_json);
  } catch (const Error& e) {
    throw CheckpointError(CheckpointErrorKind::kCorrupt, e.what());
  }
  GaitModel model(config);
  const std::uint32_t count = r.u32("record count");
  if (count != model.params().size()) {
    throw CheckpointError(CheckpointErrorKind::kCorrupt, "holds " + std::to_string(count) + " parameters, config needs " +
                                                              std::to_string(model.params().size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str("parameter name");
    if (!model.params().contains(name)) {
      throw CheckpointError(CheckpointErrorKind::kCorrupt, "unexpected parameter '" + name + "'");
    }
    Parameter& p = model.params().get(name);
    const std::uint32_t rank = r.u32("rank");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::size_t>(r.u64("shape")));
    if (shape != p.value.shape()) {
      throw CheckpointError(CheckpointErrorKind::kCorrupt, "parameter '" + name + "' has shape " + shape_str(shape) +
                                                               ", config needs " + shape_str(p.value.shape()));
    }
    r.need(8 * p.value.size(), "parameter data");
    for (double& v : p.value.data()) {
      v = r.f64("parameter data");
      if (!std::isfinite(v)) throw CheckpointError(CheckpointErrorKind::kCorrupt, "non-finite value in '" + name + "'");
    }
  }
  if (!r.done()) {
    throw CheckpointError(CheckpointErrorKind::kCorrupt, std::to_string(r.remaining()) + " trailing bytes");
  }
  return model;
}

void save_checkpoint(const GaitModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(CheckpointErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrorKind::kIo, "write failed for " + path.string());
}

GaitModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

void check_overrides(const ModelConfig& stored, const ConfigOverrides& o) {
  auto check = [](const auto& wanted, const auto& have, const char* name) {
    if (wanted && *wanted != have) {
      throw CheckpointError(CheckpointErrorKind::kConfigConflict,
                            std::string("--") + name + " conflicts with the checkpoint's stored value");
    }
  };
  check(o.layers, stored.layers, "layers");
  check(o.hidden, stored.hidden, "hidden");
  check(o.channels, stored.channels, "channels");
  check(o.window, stored.window, "window");
  check(o.use_temporal, stored.use_temporal, "no-temporal");
  check(o.residual, stored.residual, "no-residual");
}

}  // namespace gaitphase
