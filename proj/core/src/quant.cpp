#include "ladbnet/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ladbnet/error.hpp"

namespace ladbnet {

using nn::Shape;
using nn::Tensor;

namespace {

constexpr std::int32_t kQMin = -128;
constexpr std::int32_t kQMax = 127;
constexpr std::int64_t kInt32Max = std::numeric_limits<std::int32_t>::max();

std::int8_t saturate(std::int64_t v) {
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, kQMin, kQMax));
}

void note(QuantTrace* trace, std::string op, bool integer) {
  if (trace) trace->steps.push_back({std::move(op), integer});
}

// Layer index ranges of the three stages, in plan order.
struct Stages {
  std::size_t lag_end = 0;
  std::size_t tcn_end = 0;
};

const LayerSpec& spec_of(const LayerSpec& s) { return s; }
const LayerSpec& spec_of(const QuantLayer& l) { return l.spec; }

template <typename Layer>
Stages stages_of(const std::vector<Layer>& layers) {
  Stages s;
  std::size_t i = 0;
  while (i < layers.size() && spec_of(layers[i]).branch == Branch::lag) ++i;
  s.lag_end = i;
  while (i < layers.size() && spec_of(layers[i]).branch == Branch::tcn) ++i;
  s.tcn_end = i;
  return s;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void observe(std::span<const float> values) {
    for (const float v : values) {
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
    }
  }
  void merge(const Range& other) {
    lo = std::min(lo, other.lo);
    hi = std::max(hi, other.hi);
  }
};

// Float infer-mode pass over a folded model that records the range of every
// tensor the integer path quantizes.
struct RangeObserver {
  Range input;
  std::vector<Range> layer_out;
  Range lag_out, tcn_out;
};

void observe_batch(const Model& model, const Tensor<float>& batch, RangeObserver& obs) {
  const auto& config = model.config();
  const auto& layers = model.layers();
  const auto& tensors = model.layer_tensors();
  obs.input.observe(batch.data());

  auto block = [&](std::size_t i, const Tensor<float>& x) {
    const auto& spec = layers[i];
    const auto& t = tensors[i];
    Tensor<float> h = spec.kind == LayerKind::dense
                          ? nn::add_bias(nn::matmul(x, t.kernel), t.bias)
                          : nn::causal_conv1d(x, t.kernel, t.bias, spec.dilation);
    if (spec.relu) h = nn::relu(h);
    obs.layer_out[i].observe(h.data());
    return h;
  };

  std::vector<Tensor<float>> branches;
  std::size_t i = 0;
  if (config.uses_lag_branch()) {
    Tensor<float> h = nn::flatten(nn::slice_last_k(batch, config.lag_window));
    for (; i < layers.size() && layers[i].branch == Branch::lag; ++i) h = block(i, h);
    obs.lag_out.observe(h.data());
    branches.push_back(h);
  }
  if (config.uses_tcn_branch()) {
    Tensor<float> h = batch;
    for (; i < layers.size() && layers[i].branch == Branch::tcn; ++i) h = block(i, h);
    auto pooled = nn::global_pool(h, nn::PoolKind::avg);
    if (config.uses_dual_pool()) {
      pooled = nn::concat<float>({pooled, nn::global_pool(h, nn::PoolKind::max)});
    }
    obs.tcn_out.observe(pooled.data());
    branches.push_back(pooled);
  }
  Tensor<float> h = branches.size() == 1 ? branches.front() : nn::concat(branches);
  for (; i < layers.size(); ++i) h = block(i, h);
}

// acc[o] = bias[o] + sum_i (x[i] - zx) * w[i, o], requantized in place to out.
void dense_kernel(const QuantLayer& L, std::span<const std::int8_t> x,
                  std::span<std::int8_t> out, std::vector<std::int32_t>& acc) {
  const std::size_t n_in = L.spec.inputs, n_out = L.spec.outputs;
  const std::int32_t zx = L.input_params.zero_point;
  acc.assign(L.bias.begin(), L.bias.end());
  for (std::size_t i = 0; i < n_in; ++i) {
    const std::int32_t xc = static_cast<std::int32_t>(x[i]) - zx;
    if (xc == 0) continue;
    const std::int8_t* w = L.weights.data() + i * n_out;
    for (std::size_t o = 0; o < n_out; ++o) acc[o] += xc * static_cast<std::int32_t>(w[o]);
  }
  const std::int32_t zy = L.output_params.zero_point;
  const std::int32_t floor = L.spec.relu ? zy : kQMin;
  for (std::size_t o = 0; o < n_out; ++o) {
    const std::int64_t q = zy + L.multiplier.apply(acc[o]);
    out[o] = static_cast<std::int8_t>(std::clamp<std::int64_t>(q, floor, kQMax));
  }
}

// Causal conv over [steps, Cin] -> [steps, Cout]; left padding holds the
// zero point, so padded taps contribute nothing after centering.
void conv_kernel(const QuantLayer& L, std::span<const std::int8_t> x, std::size_t steps,
                 std::span<std::int8_t> out, std::vector<std::int32_t>& acc) {
  const std::size_t cin = L.spec.inputs, cout = L.spec.outputs, K = L.spec.kernel_size;
  const std::size_t d = L.spec.dilation;
  const std::int32_t zx = L.input_params.zero_point;
  const std::int32_t zy = L.output_params.zero_point;
  const std::int32_t floor = L.spec.relu ? zy : kQMin;
  for (std::size_t t = 0; t < steps; ++t) {
    acc.assign(L.bias.begin(), L.bias.end());
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t back = (K - 1 - k) * d;
      if (back > t) continue;
      const std::int8_t* row = x.data() + (t - back) * cin;
      const std::int8_t* wk = L.weights.data() + k * cin * cout;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const std::int32_t xc = static_cast<std::int32_t>(row[ci]) - zx;
        if (xc == 0) continue;
        const std::int8_t* w = wk + ci * cout;
        for (std::size_t o = 0; o < cout; ++o) acc[o] += xc * static_cast<std::int32_t>(w[o]);
      }
    }
    std::int8_t* y = out.data() + t * cout;
    for (std::size_t o = 0; o < cout; ++o) {
      const std::int64_t q = zy + L.multiplier.apply(acc[o]);
      y[o] = static_cast<std::int8_t>(std::clamp<std::int64_t>(q, floor, kQMax));
    }
  }
}

void requantize_into(std::span<const std::int8_t> in, std::int32_t z_in,
                     const FixedMultiplier& m, std::int32_t z_out, std::span<std::int8_t> out) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = saturate(z_out + m.apply(static_cast<std::int64_t>(in[i]) - z_in));
  }
}

std::size_t terms_per_output(const LayerSpec& spec) {
  return spec.kind == LayerKind::dense ? spec.inputs : spec.inputs * spec.kernel_size;
}

}  // namespace

std::string_view to_string(QuantScheme scheme) {
  return scheme == QuantScheme::symmetric ? "symmetric" : "affine";
}

QuantScheme parse_quant_scheme(std::string_view name) {
  if (name == "symmetric") return QuantScheme::symmetric;
  if (name == "affine") return QuantScheme::affine;
  throw FormatError("unknown quantization scheme '" + std::string(name) + "'");
}

QuantParams symmetric_params(double abs_max) {
  if (!std::isfinite(abs_max)) throw CalibrationError("non-finite weight range");
  if (abs_max <= 0.0) return {1.0, 0, QuantScheme::symmetric};
  return {abs_max / 127.0, 0, QuantScheme::symmetric};
}

QuantParams affine_params(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw CalibrationError("invalid activation range");
  }
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  if (hi == lo) return {1.0, 0, QuantScheme::affine};
  const double scale = (hi - lo) / 255.0;
  const double zp = std::round(-128.0 - lo / scale);
  return {scale, static_cast<std::int32_t>(std::clamp(zp, -128.0, 127.0)), QuantScheme::affine};
}

std::int8_t quantize(double x, const QuantParams& p) {
  const double q = std::round(x / p.scale) + p.zero_point;
  return static_cast<std::int8_t>(std::clamp(q, -128.0, 127.0));
}

double dequantize(std::int32_t q, const QuantParams& p) {
  return static_cast<double>(q - p.zero_point) * p.scale;
}

std::int64_t rounded_div(std::int64_t numerator, std::int64_t denominator) {
  const std::int64_t mag = (2 * (numerator < 0 ? -numerator : numerator) + denominator) /
                           (2 * denominator);
  return numerator < 0 ? -mag : mag;
}

FixedMultiplier FixedMultiplier::from_real(double multiplier) {
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) {
    throw CalibrationError("requantization multiplier must be positive and finite");
  }
  int exponent = 0;
  const double fraction = std::frexp(multiplier, &exponent);  // [0.5, 1)
  std::int64_t mantissa = std::llround(std::ldexp(fraction, 31));
  if (mantissa == (std::int64_t{1} << 31)) {
    mantissa /= 2;
    ++exponent;
  }
  const int shift = 31 - exponent;
  if (shift < 0) throw CalibrationError("requantization multiplier too large");
  return {static_cast<std::int32_t>(mantissa), std::min(shift, 62)};
}

double FixedMultiplier::real() const { return std::ldexp(static_cast<double>(mantissa), -shift); }

std::int64_t FixedMultiplier::apply(std::int64_t value) const {
  const std::int64_t product = value * mantissa;
  if (shift == 0) return product;
  const std::int64_t mag = product < 0 ? -product : product;
  const std::int64_t rounded = (mag + (std::int64_t{1} << (shift - 1))) >> shift;
  return product < 0 ? -rounded : rounded;
}

Model fold_bn(const Model& model) {
  if (model.folded()) throw StructuralError("model is already folded (no batch norm left)");
  const double eps = model.config().batch_norm.epsilon;
  std::vector<Model::LayerTensors> out;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& spec = model.layers()[l];
    const auto& t = model.layer_tensors()[l];
    if (t.gamma.defined() && !t.kernel.defined()) {
      throw StructuralError("batch norm in '" + spec.name + "' has no preceding affine layer");
    }
    Model::LayerTensors f;
    f.kernel = t.kernel.clone();
    f.bias = t.bias.clone();
    if (t.gamma.defined()) {
      const std::size_t cout = spec.outputs;
      auto w = f.kernel.data();
      auto b = f.bias.data();
      const auto gamma = t.gamma.data(), beta = t.beta.data();
      const auto mean = t.mean.data(), var = t.var.data();
      for (std::size_t o = 0; o < cout; ++o) {
        const double factor = gamma[o] / std::sqrt(static_cast<double>(var[o]) + eps);
        for (std::size_t r = 0; r < w.size() / cout; ++r) {
          w[r * cout + o] = static_cast<float>(w[r * cout + o] * factor);
        }
        b[o] = static_cast<float>((static_cast<double>(b[o]) - mean[o]) * factor + beta[o]);
      }
    }
    out.push_back(std::move(f));
  }
  return Model::from_tensors(model.config(), std::move(out), true);
}

bool QuantTrace::integer_core() const {
  if (steps.size() < 2) return false;
  if (steps.front().integer || steps.back().integer) return false;
  return std::all_of(steps.begin() + 1, steps.end() - 1,
                     [](const QuantTraceStep& s) { return s.integer; });
}

QuantizedModel QuantizedModel::from_parts(const ModelConfig& config, QuantParams input_params,
                                          QuantParams fusion_params,
                                          std::vector<QuantLayer> layers) {
  const auto plan = layer_plan(config);
  if (plan.size() != layers.size()) {
    throw StructuralError("quantized model has " + std::to_string(layers.size()) +
                          " layers, expected " + std::to_string(plan.size()));
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto& L = layers[i];
    const auto& p = plan[i];
    if (L.spec.name != p.name || L.weights.size() != terms_per_output(p) * p.outputs ||
        L.bias.size() != p.outputs) {
      throw StructuralError("quantized layer '" + p.name + "' does not match the architecture");
    }
    L.spec = p;
    L.multiplier = FixedMultiplier::from_real(L.input_params.scale * L.weight_params.scale /
                                              L.output_params.scale);
  }
  QuantizedModel q;
  q.config_ = config;
  q.input_params_ = input_params;
  q.fusion_params_ = fusion_params;
  q.layers_ = std::move(layers);
  const Stages st = stages_of(q.layers_);
  if (config.uses_lag_branch()) {
    const auto& last = q.layers_[st.lag_end - 1].output_params;
    q.lag_to_fusion_ = FixedMultiplier::from_real(last.scale / fusion_params.scale);
  }
  if (config.uses_tcn_branch()) {
    const auto& last = q.layers_[st.tcn_end - 1].output_params;
    q.tcn_to_fusion_ = FixedMultiplier::from_real(last.scale / fusion_params.scale);
  }
  if (q.accumulator_bound() > kInt32Max) {
    throw InternalError("int32 accumulator bound exceeded");
  }
  return q;
}

std::int64_t QuantizedModel::accumulator_bound() const {
  std::int64_t worst = 0;
  for (const auto& L : layers_) {
    std::int64_t bias_max = 0;
    for (const auto b : L.bias) bias_max = std::max<std::int64_t>(bias_max, std::abs(std::int64_t{b}));
    // |x - zx| <= 255 and |w| <= 127.
    const std::int64_t bound = static_cast<std::int64_t>(terms_per_output(L.spec)) * 255 * 127 + bias_max;
    worst = std::max(worst, bound);
  }
  return worst;
}

std::size_t QuantizedModel::payload_bytes() const {
  std::size_t bytes = 0;
  for (const auto& L : layers_) bytes += L.weights.size() + L.bias.size() * sizeof(std::int32_t);
  return bytes;
}

std::vector<std::int8_t> QuantizedModel::forward_integer(std::span<const std::int8_t> window,
                                                         QuantTrace* trace) const {
  const std::size_t steps = config_.seq_len, nf = config_.n_features;
  if (window.size() != steps * nf) {
    throw DimensionError("quantized window must hold " + std::to_string(steps * nf) + " values");
  }
  const Stages st = stages_of(layers_);
  std::vector<std::int32_t> acc;
  std::vector<std::int8_t> fused;
  fused.reserve(fusion_input_width(config_));

  if (config_.uses_lag_branch()) {
    const std::size_t k = config_.lag_window;
    std::vector<std::int8_t> h(window.end() - static_cast<std::ptrdiff_t>(k * nf), window.end());
    note(trace, "slice_flatten", true);
    for (std::size_t i = 0; i < st.lag_end; ++i) {
      std::vector<std::int8_t> y(layers_[i].spec.outputs);
      dense_kernel(layers_[i], h, y, acc);
      note(trace, "dense:" + layers_[i].spec.name, true);
      h = std::move(y);
    }
    const auto& p = layers_[st.lag_end - 1].output_params;
    std::vector<std::int8_t> r(h.size());
    requantize_into(h, p.zero_point, lag_to_fusion_, fusion_params_.zero_point, r);
    note(trace, "requantize:lag", true);
    fused.insert(fused.end(), r.begin(), r.end());
  }
  if (config_.uses_tcn_branch()) {
    std::vector<std::int8_t> h(window.begin(), window.end());
    for (std::size_t i = st.lag_end; i < st.tcn_end; ++i) {
      std::vector<std::int8_t> y(steps * layers_[i].spec.outputs);
      conv_kernel(layers_[i], h, steps, y, acc);
      note(trace, "conv:" + layers_[i].spec.name, true);
      h = std::move(y);
    }
    const std::size_t channels = layers_[st.tcn_end - 1].spec.outputs;
    std::vector<std::int8_t> pooled(channels * (config_.uses_dual_pool() ? 2 : 1));
    for (std::size_t c = 0; c < channels; ++c) {
      std::int64_t total = 0;
      std::int32_t best = kQMin;
      for (std::size_t t = 0; t < steps; ++t) {
        const std::int32_t v = h[t * channels + c];
        total += v;
        best = std::max(best, v);
      }
      pooled[c] = saturate(rounded_div(total, static_cast<std::int64_t>(steps)));
      if (config_.uses_dual_pool()) pooled[channels + c] = static_cast<std::int8_t>(best);
    }
    note(trace, config_.uses_dual_pool() ? "pool:avg+max" : "pool:avg", true);
    const auto& p = layers_[st.tcn_end - 1].output_params;
    std::vector<std::int8_t> r(pooled.size());
    requantize_into(pooled, p.zero_point, tcn_to_fusion_, fusion_params_.zero_point, r);
    note(trace, "requantize:tcn", true);
    fused.insert(fused.end(), r.begin(), r.end());
  }

  std::vector<std::int8_t> h = std::move(fused);
  for (std::size_t i = st.tcn_end; i < layers_.size(); ++i) {
    std::vector<std::int8_t> y(layers_[i].spec.outputs);
    dense_kernel(layers_[i], h, y, acc);
    note(trace, "dense:" + layers_[i].spec.name, true);
    h = std::move(y);
  }
  return h;
}

Tensor<float> QuantizedModel::predict(const Tensor<float>& batch, QuantTrace* trace) const {
  if (batch.rank() != 3 || batch.dim(1) != config_.seq_len ||
      batch.dim(2) != config_.n_features) {
    throw DimensionError("model input must be [B," + std::to_string(config_.seq_len) + "," +
                         std::to_string(config_.n_features) + "], got " +
                         nn::to_string(batch.shape()));
  }
  const std::size_t n = batch.dim(0), per = config_.seq_len * config_.n_features;
  const std::size_t horizon = config_.horizon;
  auto out = Tensor<float>::zeros({n, horizon});
  const auto x = batch.data();
  auto y = out.data();
  std::vector<std::int8_t> q(per);
  for (std::size_t b = 0; b < n; ++b) {
    QuantTrace* const t = b == 0 ? trace : nullptr;
    for (std::size_t i = 0; i < per; ++i) q[i] = quantize(x[b * per + i], input_params_);
    note(t, "quantize_input", false);
    const auto r = forward_integer(q, t);
    for (std::size_t j = 0; j < horizon; ++j) {
      y[b * horizon + j] = static_cast<float>(dequantize(r[j], output_params()));
    }
    note(t, "dequantize_output", false);
  }
  return out;
}

QuantizedModel calibrate(const Model& folded, const Tensor<float>& representative,
                         const CalibrationOptions& options) {
  if (!folded.folded()) throw ContractError("calibrate expects a batch-norm folded model");
  const auto& config = folded.config();
  if (representative.rank() != 3 || representative.dim(0) < 1) {
    throw CalibrationError("calibration needs at least one representative window");
  }
  if (representative.dim(1) != config.seq_len || representative.dim(2) != config.n_features) {
    throw DimensionError("representative windows must be [N," + std::to_string(config.seq_len) +
                         "," + std::to_string(config.n_features) + "]");
  }
  const auto& layers = folded.layers();
  RangeObserver obs;
  obs.layer_out.resize(layers.size());
  const std::size_t n = representative.dim(0), per = config.seq_len * config.n_features;
  const std::size_t chunk = std::max<std::size_t>(options.batch_size, 1);
  const auto all = representative.data();
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t m = std::min(chunk, n - b);
    Tensor<float> part({m, config.seq_len, config.n_features},
                       std::vector<float>(all.begin() + static_cast<std::ptrdiff_t>(b * per),
                                          all.begin() + static_cast<std::ptrdiff_t>((b + m) * per)));
    observe_batch(folded, part, obs);
  }

  const QuantParams input = affine_params(obs.input.lo, obs.input.hi);
  Range fusion_range;
  if (config.uses_lag_branch()) fusion_range.merge(obs.lag_out);
  if (config.uses_tcn_branch()) fusion_range.merge(obs.tcn_out);
  const QuantParams fusion = affine_params(fusion_range.lo, fusion_range.hi);
  const Stages st = stages_of(layers);

  std::vector<QuantLayer> qlayers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i];
    const auto& t = folded.layer_tensors()[i];
    QuantLayer L;
    L.spec = spec;
    if (i == st.tcn_end) {
      L.input_params = fusion;
    } else if (i == 0 || i == st.lag_end) {
      L.input_params = input;  // first layer of a branch
    } else {
      L.input_params = qlayers.back().output_params;
    }
    L.output_params = affine_params(obs.layer_out[i].lo, obs.layer_out[i].hi);

    double abs_max = 0.0;
    for (const float w : t.kernel.data()) abs_max = std::max(abs_max, std::fabs(static_cast<double>(w)));
    L.weight_params = symmetric_params(abs_max);
    L.weights.reserve(t.kernel.size());
    for (const float w : t.kernel.data()) L.weights.push_back(quantize(w, L.weight_params));

    const double bias_scale = L.input_params.scale * L.weight_params.scale;
    for (const float b : t.bias.data()) {
      const double q = std::round(static_cast<double>(b) / bias_scale);
      if (std::fabs(q) > static_cast<double>(kInt32Max)) {
        throw CalibrationError("bias of '" + spec.name + "' does not fit in int32");
      }
      L.bias.push_back(static_cast<std::int32_t>(q));
    }
    qlayers.push_back(std::move(L));
  }
  return QuantizedModel::from_parts(config, input, fusion, std::move(qlayers));
}

std::size_t float_payload_bytes(const Model& model) {
  return count_params(model.state()) * sizeof(float);
}

}  // namespace ladbnet
