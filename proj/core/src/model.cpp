#include "ladbnet/model.hpp"

#include <cmath>

#include "ladbnet/error.hpp"

namespace ladbnet {

using nn::Shape;
using nn::Tensor;

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 5> kVariantNames{{
    {Variant::full, "full"},
    {Variant::lag_only, "lag_only"},
    {Variant::tcn_only, "tcn_only"},
    {Variant::no_dilated, "no_dilated"},
    {Variant::no_dual_pool, "no_dual_pool"},
}};

Tensor<float> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<float> values(nn::numel(shape));
  for (auto& v : values) v = static_cast<float>(rng.uniform(-limit, limit));
  return Tensor<float>(std::move(shape), std::move(values), true);
}

Tensor<float> clone_or_empty(const Tensor<float>& t) { return t.defined() ? t.clone() : t; }

}  // namespace

std::string_view to_string(Variant variant) {
  for (const auto& [v, name] : kVariantNames)
    if (v == variant) return name;
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (const auto& [v, n] : kVariantNames)
    if (n == name) return v;
  throw ConfigError("unknown model variant '" + std::string(name) +
                    "' (expected full, lag_only, tcn_only, no_dilated or no_dual_pool)");
}

const std::array<Variant, 5>& all_variants() {
  static constexpr std::array<Variant, 5> kAll{Variant::full, Variant::lag_only,
                                               Variant::tcn_only, Variant::no_dilated,
                                               Variant::no_dual_pool};
  return kAll;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw ConfigError(std::string("model.") + what + " must be >= 1");
  };
  positive(seq_len, "seq_len");
  positive(n_features, "n_features");
  positive(lag_window, "lag_window");
  positive(horizon, "horizon");
  positive(dilated_filters, "dilated_filters");
  positive(kernel_size, "kernel_size");
  positive(dilation, "dilation");
  if (lag_window > seq_len) throw ConfigError("model.lag_window must not exceed model.seq_len");
  if (conv_filters.empty()) throw ConfigError("model.conv_filters must list at least one layer");
  if (lag_dense.empty()) throw ConfigError("model.lag_dense must list at least one layer");
  if (fusion_dense.empty()) throw ConfigError("model.fusion_dense must list at least one layer");
  for (auto v : conv_filters) positive(v, "conv_filters[]");
  for (auto v : lag_dense) positive(v, "lag_dense[]");
  for (auto v : fusion_dense) positive(v, "fusion_dense[]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  if (!(batch_norm.momentum >= 0.0 && batch_norm.momentum < 1.0))
    throw ConfigError("model.batch_norm.momentum must lie in [0, 1)");
  if (!(batch_norm.epsilon > 0.0)) throw ConfigError("model.batch_norm.epsilon must be > 0");
}

std::size_t fusion_input_width(const ModelConfig& config) {
  std::size_t width = 0;
  if (config.uses_lag_branch()) width += config.lag_dense.back();
  if (config.uses_tcn_branch()) {
    const std::size_t channels =
        config.uses_dilated_block() ? config.dilated_filters : config.conv_filters.back();
    width += channels * (config.uses_dual_pool() ? 2 : 1);
  }
  return width;
}

std::vector<LayerSpec> layer_plan(const ModelConfig& config) {
  config.validate();
  std::vector<LayerSpec> plan;
  if (config.uses_lag_branch()) {
    std::size_t in = config.lag_window * config.n_features;
    for (std::size_t i = 0; i < config.lag_dense.size(); ++i) {
      plan.push_back({"lag_dense" + std::to_string(i + 1), Branch::lag, LayerKind::dense, in,
                      config.lag_dense[i], 1, 1, true, true, true});
      in = config.lag_dense[i];
    }
  }
  if (config.uses_tcn_branch()) {
    std::size_t in = config.n_features;
    for (std::size_t i = 0; i < config.conv_filters.size(); ++i) {
      plan.push_back({"tcn_conv" + std::to_string(i + 1), Branch::tcn, LayerKind::conv, in,
                      config.conv_filters[i], config.kernel_size, 1, true, true, true});
      in = config.conv_filters[i];
    }
    if (config.uses_dilated_block()) {
      plan.push_back({"tcn_dilated", Branch::tcn, LayerKind::conv, in, config.dilated_filters,
                      config.kernel_size, config.dilation, true, true, true});
    }
  }
  std::size_t in = fusion_input_width(config);
  for (std::size_t i = 0; i < config.fusion_dense.size(); ++i) {
    // The last hidden fusion layer has no batch norm.
    const bool bn = i + 1 < config.fusion_dense.size();
    plan.push_back({"fusion_dense" + std::to_string(i + 1), Branch::fusion, LayerKind::dense, in,
                    config.fusion_dense[i], 1, 1, bn, true, true});
    in = config.fusion_dense[i];
  }
  plan.push_back({"output", Branch::fusion, LayerKind::dense, in, config.horizon, 1, 1, false,
                  false, false});
  return plan;
}

std::size_t count_params(std::span<const NamedTensor> tensors) {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.tensor.size();
  return total;
}

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  Model model;
  model.config_ = config;
  model.layers_ = layer_plan(config);
  Rng rng(seed);
  for (const auto& layer : model.layers_) {
    LayerTensors t;
    if (layer.kind == LayerKind::dense) {
      t.kernel = glorot_uniform({layer.inputs, layer.outputs}, layer.inputs, layer.outputs, rng);
    } else {
      const std::size_t k = layer.kernel_size;
      t.kernel = glorot_uniform({k, layer.inputs, layer.outputs}, k * layer.inputs,
                                k * layer.outputs, rng);
    }
    t.bias = Tensor<float>::zeros({layer.outputs}, true);
    if (layer.batch_norm) {
      t.gamma = Tensor<float>::full({layer.outputs}, 1.0f, true);
      t.beta = Tensor<float>::zeros({layer.outputs}, true);
      t.mean = Tensor<float>::zeros({layer.outputs});
      t.var = Tensor<float>::full({layer.outputs}, 1.0f);
    }
    model.tensors_.push_back(std::move(t));
  }
  return model;
}

Model Model::from_tensors(const ModelConfig& config, std::vector<LayerTensors> tensors,
                          bool folded) {
  Model model;
  model.config_ = config;
  model.layers_ = layer_plan(config);
  if (tensors.size() != model.layers_.size()) {
    throw StructuralError("expected tensors for " + std::to_string(model.layers_.size()) +
                          " layers, got " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& spec = model.layers_[i];
    const auto& t = tensors[i];
    const Shape kernel = spec.kind == LayerKind::dense
                             ? Shape{spec.inputs, spec.outputs}
                             : Shape{spec.kernel_size, spec.inputs, spec.outputs};
    if (!t.kernel.defined() || t.kernel.shape() != kernel || !t.bias.defined() ||
        t.bias.shape() != Shape{spec.outputs}) {
      throw StructuralError("layer '" + spec.name + "' has missing or mis-shaped kernel/bias");
    }
    const bool has_bn = t.gamma.defined();
    if (has_bn && !spec.batch_norm) {
      throw StructuralError("layer '" + spec.name + "' carries batch norm the plan does not allow");
    }
    if (spec.batch_norm && !folded) {
      for (const auto* p : {&t.gamma, &t.beta, &t.mean, &t.var}) {
        if (!p->defined() || p->shape() != Shape{spec.outputs})
          throw StructuralError("layer '" + spec.name + "' has incomplete batch-norm tensors");
      }
    }
    if (folded && has_bn) {
      throw StructuralError("layer '" + spec.name + "' still has batch norm in a folded model");
    }
  }
  model.tensors_ = std::move(tensors);
  model.folded_ = folded;
  return model;
}

Tensor<float> Model::run(const Tensor<float>& batch, nn::Mode mode, nn::Graph<float>* graph,
                         Rng* rng, Tensor<float>* tcn_tap) const {
  if (batch.rank() != 3 || batch.dim(1) != config_.seq_len ||
      batch.dim(2) != config_.n_features) {
    throw DimensionError("model input must be [B," + std::to_string(config_.seq_len) + "," +
                         std::to_string(config_.n_features) + "], got " +
                         nn::to_string(batch.shape()));
  }
  Rng unused(0);
  Rng& dropout_rng = rng ? *rng : unused;

  auto block = [&](std::size_t index, const Tensor<float>& input) {
    const auto& spec = layers_[index];
    auto t = tensors_[index];  // handle copies
    Tensor<float> h = spec.kind == LayerKind::dense
                          ? nn::add_bias(nn::matmul(input, t.kernel, graph), t.bias, graph)
                          : nn::causal_conv1d(input, t.kernel, t.bias, spec.dilation, graph);
    if (t.gamma.defined()) {
      nn::BatchNormState<float> state{t.mean, t.var};
      h = nn::batch_norm(h, t.gamma, t.beta, state, mode, config_.batch_norm, graph);
    }
    if (spec.relu) h = nn::relu(h, graph);
    if (spec.dropout) h = nn::dropout(h, config_.dropout, mode, dropout_rng, graph);
    return h;
  };

  std::vector<Tensor<float>> branches;
  std::size_t i = 0;
  if (config_.uses_lag_branch()) {
    Tensor<float> h = nn::flatten(nn::slice_last_k(batch, config_.lag_window, graph), graph);
    for (; i < layers_.size() && layers_[i].branch == Branch::lag; ++i) h = block(i, h);
    branches.push_back(h);
  }
  if (config_.uses_tcn_branch()) {
    Tensor<float> h = batch;
    for (; i < layers_.size() && layers_[i].branch == Branch::tcn; ++i) h = block(i, h);
    if (tcn_tap) {
      *tcn_tap = h;
      return h;
    }
    auto avg = nn::global_pool(h, nn::PoolKind::avg, graph);
    if (config_.uses_dual_pool()) {
      branches.push_back(nn::concat({avg, nn::global_pool(h, nn::PoolKind::max, graph)}, graph));
    } else {
      branches.push_back(avg);
    }
  }
  Tensor<float> h = branches.size() == 1 ? branches.front() : nn::concat(branches, graph);
  for (; i < layers_.size(); ++i) h = block(i, h);
  return h;
}

Tensor<float> Model::predict(const Tensor<float>& batch) const {
  return run(batch, nn::Mode::infer, nullptr, nullptr);
}

Tensor<float> Model::tcn_sequence(const Tensor<float>& batch) const {
  if (!config_.uses_tcn_branch()) throw StructuralError("variant has no TCN branch");
  Tensor<float> tap;
  run(batch, nn::Mode::infer, nullptr, nullptr, &tap);
  return tap;
}

Tensor<float> Model::forward_train(const Tensor<float>& batch, nn::Graph<float>& graph,
                                   Rng& rng) {
  return run(batch, nn::Mode::train, &graph, &rng);
}

std::vector<NamedTensor> Model::parameters() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& name = layers_[i].name;
    const auto& t = tensors_[i];
    out.push_back({name + "/kernel", t.kernel});
    out.push_back({name + "/bias", t.bias});
    if (t.gamma.defined()) {
      out.push_back({name + "/bn_gamma", t.gamma});
      out.push_back({name + "/bn_beta", t.beta});
    }
  }
  return out;
}

std::vector<NamedTensor> Model::buffers() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& t = tensors_[i];
    if (!t.mean.defined()) continue;
    out.push_back({layers_[i].name + "/bn_mean", t.mean});
    out.push_back({layers_[i].name + "/bn_var", t.var});
  }
  return out;
}

std::vector<NamedTensor> Model::state() const {
  auto out = parameters();
  for (auto& b : buffers()) out.push_back(std::move(b));
  return out;
}

std::size_t Model::count_params() const { return ladbnet::count_params(parameters()); }

Model Model::clone() const {
  Model copy;
  copy.config_ = config_;
  copy.layers_ = layers_;
  copy.folded_ = folded_;
  for (const auto& t : tensors_) {
    copy.tensors_.push_back({clone_or_empty(t.kernel), clone_or_empty(t.bias),
                             clone_or_empty(t.gamma), clone_or_empty(t.beta),
                             clone_or_empty(t.mean), clone_or_empty(t.var)});
  }
  return copy;
}

void Model::assign_values(const Model& other) {
  const auto dst = state();
  const auto src = other.state();
  if (dst.size() != src.size()) {
    throw StructuralError("assign_values: models have different tensor sets");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].name != src[i].name || dst[i].tensor.shape() != src[i].tensor.shape()) {
      throw StructuralError("assign_values: tensor '" + dst[i].name + "' does not match '" +
                            src[i].name + "'");
    }
    auto d = dst[i].tensor;
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), d.data().begin());
  }
}

}  // namespace ladbnet
