#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ladbnet/ops.hpp"
#include "ladbnet/rng.hpp"
#include "ladbnet/tensor.hpp"

namespace ladbnet {

/// Architecture variants: the complete dual-branch network and the four
/// ablations (one branch only, no dilated block, average pooling only).
enum class Variant { full, lag_only, tcn_only, no_dilated, no_dual_pool };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view name);
const std::array<Variant, 5>& all_variants();

struct ModelConfig {
  std::size_t seq_len = 144;
  std::size_t n_features = 27;
  std::size_t lag_window = 24;
  std::size_t horizon = 72;
  std::vector<std::size_t> conv_filters{64, 64};
  std::size_t dilated_filters = 128;
  std::size_t kernel_size = 3;
  std::size_t dilation = 2;
  std::vector<std::size_t> lag_dense{256, 128};
  std::vector<std::size_t> fusion_dense{256, 128};
  double dropout = 0.1;
  Variant variant = Variant::full;
  nn::BatchNormOptions batch_norm{};

  bool uses_lag_branch() const { return variant != Variant::tcn_only; }
  bool uses_tcn_branch() const { return variant != Variant::lag_only; }
  bool uses_dilated_block() const { return variant != Variant::no_dilated; }
  bool uses_dual_pool() const { return variant != Variant::no_dual_pool; }

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class LayerKind { dense, conv };
enum class Branch { lag, tcn, fusion };

/// One affine layer and the epilogue that follows it:
/// affine -> [batch norm] -> [relu] -> [dropout].
struct LayerSpec {
  std::string name;
  Branch branch;
  LayerKind kind;
  std::size_t inputs;
  std::size_t outputs;
  std::size_t kernel_size = 1;
  std::size_t dilation = 1;
  bool batch_norm = false;
  bool relu = false;
  bool dropout = false;
};

/// Layer list for a configuration, in forward order.
std::vector<LayerSpec> layer_plan(const ModelConfig& config);

/// Width of the fused lag/TCN representation entering the fusion head.
std::size_t fusion_input_width(const ModelConfig& config);

struct NamedTensor {
  std::string name;
  nn::Tensor<float> tensor;
};

/// Number of scalar values across the given tensors.
std::size_t count_params(std::span<const NamedTensor> tensors);

class Model {
 public:
  /// Glorot-uniform kernels drawn in layer order from Rng(seed); zero biases,
  /// unit gamma, zero beta, running mean 0 / variance 1.
  static Model build(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  bool folded() const { return folded_; }

  /// Inference on [B, seq_len, n_features] -> [B, horizon]. Does not touch
  /// model state, so concurrent calls are safe.
  nn::Tensor<float> predict(const nn::Tensor<float>& batch) const;

  /// Inference-mode TCN activations before pooling, [B, seq_len, C].
  /// Throws StructuralError for the lag_only variant.
  nn::Tensor<float> tcn_sequence(const nn::Tensor<float>& batch) const;

  /// Train-mode forward: batch statistics, running-stat updates, dropout from
  /// `rng`, operations recorded on `graph`.
  nn::Tensor<float> forward_train(const nn::Tensor<float>& batch, nn::Graph<float>& graph,
                                  Rng& rng);

  /// Trainable tensors (kernels, biases, BN gamma/beta) in layer order.
  /// Handles share storage with the model.
  std::vector<NamedTensor> parameters() const;
  /// Non-trainable BN running statistics.
  std::vector<NamedTensor> buffers() const;
  /// parameters() followed by buffers().
  std::vector<NamedTensor> state() const;

  std::size_t count_params() const;

  Model clone() const;
  /// Copies every value of `other` (same architecture) into this model.
  void assign_values(const Model& other);

  /// Per-layer tensors; BN entries are undefined for layers without BN or
  /// once folded.
  struct LayerTensors {
    nn::Tensor<float> kernel, bias, gamma, beta, mean, var;
  };
  const std::vector<LayerTensors>& layer_tensors() const { return tensors_; }

  /// Rebuilds a model from a layer plan and explicit tensors (used by the
  /// loader and by batch-norm folding).
  static Model from_tensors(const ModelConfig& config, std::vector<LayerTensors> tensors,
                            bool folded);

 private:
  nn::Tensor<float> run(const nn::Tensor<float>& batch, nn::Mode mode, nn::Graph<float>* graph,
                        Rng* rng, nn::Tensor<float>* tcn_tap = nullptr) const;

  ModelConfig config_;
  std::vector<LayerSpec> layers_;
  std::vector<LayerTensors> tensors_;
  bool folded_ = false;
};

}  // namespace ladbnet
