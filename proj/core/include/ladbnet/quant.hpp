#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ladbnet/model.hpp"
#include "ladbnet/tensor.hpp"

namespace ladbnet {

enum class QuantScheme { symmetric, affine };
std::string_view to_string(QuantScheme scheme);
QuantScheme parse_quant_scheme(std::string_view name);

/// Real value x is stored as q = clamp(round(x / scale) + zero_point, -128, 127).
struct QuantParams {
  double scale = 1.0;
  std::int32_t zero_point = 0;
  QuantScheme scheme = QuantScheme::symmetric;

  bool operator==(const QuantParams&) const = default;
};

/// scale = max|w| / 127, zero point 0; an all-zero tensor gets scale 1.
QuantParams symmetric_params(double abs_max);
/// Range [lo, hi] widened to contain 0, scale = (hi - lo) / 255,
/// zero_point = round(-128 - lo / scale). A degenerate range gets scale 1.
QuantParams affine_params(double lo, double hi);

std::int8_t quantize(double x, const QuantParams& p);
double dequantize(std::int32_t q, const QuantParams& p);

/// Round-half-away-from-zero division of an integer by a positive count.
std::int64_t rounded_div(std::int64_t numerator, std::int64_t denominator);

/// Real multiplier M > 0 encoded as M ~= mantissa * 2^-shift with mantissa in
/// [2^30, 2^31). apply() multiplies in 64 bits and shifts right with
/// round-half-away-from-zero.
struct FixedMultiplier {
  std::int32_t mantissa = 1 << 30;
  std::int32_t shift = 30;

  static FixedMultiplier from_real(double multiplier);
  double real() const;
  std::int64_t apply(std::int64_t value) const;
  bool operator==(const FixedMultiplier&) const = default;
};

/// Folds every batch norm into the preceding dense/conv layer using the
/// running statistics. Throws StructuralError on an already folded model.
Model fold_bn(const Model& model);

struct QuantLayer {
  LayerSpec spec;
  std::vector<std::int8_t> weights;  // same layout as the float kernel
  QuantParams weight_params;
  std::vector<std::int32_t> bias;    // at scale input.scale * weight.scale
  QuantParams input_params;
  QuantParams output_params;
  FixedMultiplier multiplier;        // input.scale * weight.scale / output.scale
};

/// One executed step of a quantized forward pass.
struct QuantTraceStep {
  std::string op;
  bool integer;
};

struct QuantTrace {
  std::vector<QuantTraceStep> steps;
  /// True when every step strictly between the input quantize and the
  /// output dequantize ran on integers only.
  bool integer_core() const;
};

struct CalibrationOptions {
  std::size_t batch_size = 100;
};

class QuantizedModel {
 public:
  /// Rebuilds a quantized model from stored parts; requantization
  /// multipliers are recomputed from the parameters.
  static QuantizedModel from_parts(const ModelConfig& config, QuantParams input_params,
                                   QuantParams fusion_params, std::vector<QuantLayer> layers);

  const ModelConfig& config() const { return config_; }
  const std::vector<QuantLayer>& layers() const { return layers_; }
  const QuantParams& input_params() const { return input_params_; }
  /// Shared parameters of the concatenated branch outputs.
  const QuantParams& fusion_params() const { return fusion_params_; }
  const QuantParams& output_params() const { return layers_.back().output_params; }

  /// [B, seq_len, n_features] normalized inputs -> [B, horizon] normalized
  /// outputs; quantize and dequantize are the only float steps. `trace`
  /// records the pass over the first window.
  nn::Tensor<float> predict(const nn::Tensor<float>& batch, QuantTrace* trace = nullptr) const;

  /// Integer core for one window already quantized with input_params().
  std::vector<std::int8_t> forward_integer(std::span<const std::int8_t> window,
                                           QuantTrace* trace = nullptr) const;

  /// Bytes of int8 weights plus int32 biases.
  std::size_t payload_bytes() const;
  /// Largest possible |accumulator| over all layers; below 2^31 by
  /// construction.
  std::int64_t accumulator_bound() const;

 private:
  ModelConfig config_;
  QuantParams input_params_;
  QuantParams fusion_params_;
  std::vector<QuantLayer> layers_;
  FixedMultiplier lag_to_fusion_;
  FixedMultiplier tcn_to_fusion_;
};

/// Post-training quantization of a folded model with min/max ranges observed
/// on `representative` ([N, seq_len, n_features], N >= 1).
QuantizedModel calibrate(const Model& folded, const nn::Tensor<float>& representative,
                         const CalibrationOptions& options = {});

/// Float32 payload of a model: parameters plus batch-norm statistics.
std::size_t float_payload_bytes(const Model& model);

}  // namespace ladbnet
