#include "ladbnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "ladbnet/error.hpp"

namespace ladbnet::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <typename T>
ConstMatMap<T> as_matrix(std::span<const T> data, std::size_t rows, std::size_t cols) {
  return ConstMatMap<T>(data.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

template <typename T>
MatMap<T> as_matrix(std::span<T> data, std::size_t rows, std::size_t cols) {
  return MatMap<T>(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
bool tracks(const Graph<T>* graph, std::initializer_list<const Tensor<T>*> inputs) {
  if (graph == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<T>* t) { return t->defined() && t->requires_grad(); });
}

void require_defined(bool defined, const char* op) {
  if (!defined) throw ContractError(std::string(op) + ": undefined tensor argument");
}

// Splits [.., T, C] into (batch, steps, channels) for rank-2 and rank-3 inputs.
struct SeqDims {
  std::size_t batch, steps, channels;
};

template <typename T>
SeqDims sequence_dims(const Tensor<T>& x, const char* op) {
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
  throw DimensionError(std::string(op) + ": expected [T,C] or [B,T,C], got " +
                       to_string(x.shape()));
}

template <typename T>
Shape sequence_shape(const Tensor<T>& like, std::size_t batch, std::size_t steps,
                     std::size_t channels) {
  if (like.rank() == 2) return {steps, channels};
  return {batch, steps, channels};
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Graph<T>* graph) {
  require_defined(a.defined() && b.defined(), "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto out = Tensor<T>::zeros({m, n});
  as_matrix(out.data(), m, n).noalias() = as_matrix(a.data(), m, k) * as_matrix(b.data(), k, n);

  if (tracks(graph, {&a, &b})) {
    out.set_requires_grad(true);
    graph->record("matmul", {a, b}, out, [a, b, out, m, k, n]() mutable {
      const auto dout = as_matrix(std::span<const T>(out.grad()), m, n);
      if (a.requires_grad()) {
        as_matrix(a.ensure_grad(), m, k).noalias() +=
            dout * as_matrix(std::span<const T>(b.data()), k, n).transpose();
      }
      if (b.requires_grad()) {
        as_matrix(b.ensure_grad(), k, n).noalias() +=
            as_matrix(std::span<const T>(a.data()), m, k).transpose() * dout;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias, Graph<T>* graph) {
  require_defined(x.defined() && bias.defined(), "add_bias");
  if (x.rank() == 0 || bias.rank() != 1 || bias.dim(0) != x.shape().back()) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) +
                         " does not match last axis of " + to_string(x.shape()));
  }
  const std::size_t channels = bias.dim(0);
  const std::size_t rows = x.size() / channels;
  auto out = x.clone();
  out.set_requires_grad(false);
  out.clear_grad();
  as_matrix(out.data(), rows, channels).rowwise() +=
      ConstVecMap<T>(bias.data().data(), static_cast<Eigen::Index>(channels)).transpose();

  if (tracks(graph, {&x, &bias})) {
    out.set_requires_grad(true);
    graph->record("add_bias", {x, bias}, out, [x, bias, out, rows, channels]() mutable {
      const auto dout = as_matrix(std::span<const T>(out.grad()), rows, channels);
      if (x.requires_grad()) as_matrix(x.ensure_grad(), rows, channels) += dout;
      if (bias.requires_grad()) {
        VecMap<T>(bias.ensure_grad().data(), static_cast<Eigen::Index>(channels)) +=
            dout.colwise().sum().transpose();
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> causal_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                        std::size_t dilation, Graph<T>* graph) {
  require_defined(x.defined() && w.defined() && bias.defined(), "causal_conv1d");
  const auto [batch, steps, in_ch] = sequence_dims(x, "causal_conv1d");
  if (w.rank() != 3 || w.dim(1) != in_ch) {
    throw DimensionError("causal_conv1d: kernel " + to_string(w.shape()) +
                         " does not match input " + to_string(x.shape()));
  }
  const std::size_t kernel = w.dim(0), out_ch = w.dim(2);
  if (kernel == 0) throw DimensionError("causal_conv1d: kernel size must be >= 1");
  if (dilation == 0) throw ConfigError("causal_conv1d: dilation must be >= 1");
  if (bias.rank() != 1 || bias.dim(0) != out_ch) {
    throw DimensionError("causal_conv1d: bias " + to_string(bias.shape()) + " does not match " +
                         std::to_string(out_ch) + " output channels");
  }

  // im2col: row (b,t) holds the K taps [t-(K-1)d, ..., t] side by side.
  const std::size_t rows = batch * steps, width = kernel * in_ch;
  Storage<T> cols(rows * width, T{0});
  const auto xs = x.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      T* dst = cols.data() + (b * steps + t) * width;
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::size_t back = (kernel - 1 - k) * dilation;
        if (back > t) continue;
        const T* src = xs.data() + (b * steps + (t - back)) * in_ch;
        std::copy(src, src + in_ch, dst + k * in_ch);
      }
    }
  }

  auto out = Tensor<T>::zeros(sequence_shape(x, batch, steps, out_ch));
  auto result = as_matrix(out.data(), rows, out_ch);
  result.noalias() = as_matrix(std::span<const T>(cols), rows, width) *
                     as_matrix(w.data(), width, out_ch);
  result.rowwise() +=
      ConstVecMap<T>(bias.data().data(), static_cast<Eigen::Index>(out_ch)).transpose();

  if (tracks(graph, {&x, &w, &bias})) {
    out.set_requires_grad(true);
    graph->record(
        "causal_conv1d", {x, w, bias}, out,
        [x, w, bias, out, cols = std::move(cols), batch = batch, steps = steps, in_ch = in_ch,
         kernel, out_ch, dilation, rows, width]() mutable {
          const auto dout = as_matrix(std::span<const T>(out.grad()), rows, out_ch);
          if (w.requires_grad()) {
            as_matrix(w.ensure_grad(), width, out_ch).noalias() +=
                as_matrix(std::span<const T>(cols), rows, width).transpose() * dout;
          }
          if (bias.requires_grad()) {
            VecMap<T>(bias.ensure_grad().data(), static_cast<Eigen::Index>(out_ch)) +=
                dout.colwise().sum().transpose();
          }
          if (x.requires_grad()) {
            RowMat<T> dcols = dout * as_matrix(std::span<const T>(w.data()), width, out_ch).transpose();
            auto dx = x.ensure_grad();
            for (std::size_t b = 0; b < batch; ++b) {
              for (std::size_t t = 0; t < steps; ++t) {
                const T* src = dcols.data() + (b * steps + t) * width;
                for (std::size_t k = 0; k < kernel; ++k) {
                  const std::size_t back = (kernel - 1 - k) * dilation;
                  if (back > t) continue;
                  T* dst = dx.data() + (b * steps + (t - back)) * in_ch;
                  for (std::size_t c = 0; c < in_ch; ++c) dst[c] += src[k * in_ch + c];
                }
              }
            }
          }
        });
  }
  return out;
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, Mode mode, const BatchNormOptions& options,
                     Graph<T>* graph) {
  require_defined(x.defined() && gamma.defined() && beta.defined(), "batch_norm");
  require_defined(state.mean.defined() && state.var.defined(), "batch_norm state");
  if (x.rank() == 0) throw DimensionError("batch_norm: scalar input");
  const std::size_t channels = x.shape().back();
  for (const Tensor<T>* p :
       std::initializer_list<const Tensor<T>*>{&gamma, &beta, &state.mean, &state.var}) {
    if (p->size() != channels) {
      throw DimensionError("batch_norm: per-channel tensor " + to_string(p->shape()) +
                           " does not match " + std::to_string(channels) + " channels");
    }
  }
  const std::size_t count = x.size() / channels;
  const auto xs = x.data();
  const auto g = gamma.data();
  const auto bta = beta.data();

  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(channels);
  auto out = Tensor<T>::zeros(x.shape());
  auto ys = out.data();

  if (mode == Mode::train) {
    if (count < 2) {
      throw ContractError("batch_norm: train mode needs at least 2 values per channel, got " +
                          std::to_string(count));
    }
    std::vector<double> mean(channels, 0.0), var(channels, 0.0);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t c = 0; c < channels; ++c) mean[c] += xs[i * channels + c];
    for (auto& m : mean) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = xs[i * channels + c] - mean[c];
        var[c] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<double>(count);

    auto rm = state.mean.data();
    auto rv = state.var.data();
    const double unbias = static_cast<double>(count) / static_cast<double>(count - 1);
    for (std::size_t c = 0; c < channels; ++c) {
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var[c] + options.epsilon));
      rm[c] = static_cast<T>(options.momentum * rm[c] + (1.0 - options.momentum) * mean[c]);
      rv[c] = static_cast<T>(options.momentum * rv[c] +
                             (1.0 - options.momentum) * var[c] * unbias);
    }
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t j = i * channels + c;
        xhat[j] = static_cast<T>((xs[j] - mean[c]) * inv_std[c]);
        ys[j] = g[c] * xhat[j] + bta[c];
      }
    }
  } else {
    const auto rm = state.mean.data();
    const auto rv = state.var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rv[c]) + options.epsilon));
    }
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t j = i * channels + c;
        xhat[j] = (xs[j] - rm[c]) * inv_std[c];
        ys[j] = g[c] * xhat[j] + bta[c];
      }
    }
  }

  if (tracks(graph, {&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    graph->record("batch_norm", {x, gamma, beta}, out,
                  [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std),
                   channels, count, mode]() mutable {
                    const auto dy = std::span<const T>(out.grad());
                    const auto gs = gamma.data();
                    std::vector<double> sum_dy(channels, 0.0), sum_dy_xhat(channels, 0.0);
                    for (std::size_t i = 0; i < count; ++i) {
                      for (std::size_t c = 0; c < channels; ++c) {
                        const std::size_t j = i * channels + c;
                        sum_dy[c] += dy[j];
                        sum_dy_xhat[c] += dy[j] * xhat[j];
                      }
                    }
                    if (gamma.requires_grad()) {
                      auto dg = gamma.ensure_grad();
                      for (std::size_t c = 0; c < channels; ++c) dg[c] += static_cast<T>(sum_dy_xhat[c]);
                    }
                    if (beta.requires_grad()) {
                      auto db = beta.ensure_grad();
                      for (std::size_t c = 0; c < channels; ++c) db[c] += static_cast<T>(sum_dy[c]);
                    }
                    if (!x.requires_grad()) return;
                    auto dx = x.ensure_grad();
                    if (mode == Mode::infer) {
                      for (std::size_t i = 0; i < count; ++i)
                        for (std::size_t c = 0; c < channels; ++c)
                          dx[i * channels + c] += dy[i * channels + c] * gs[c] * inv_std[c];
                      return;
                    }
                    const double n = static_cast<double>(count);
                    for (std::size_t i = 0; i < count; ++i) {
                      for (std::size_t c = 0; c < channels; ++c) {
                        const std::size_t j = i * channels + c;
                        const double v = (n * dy[j] - sum_dy[c] - xhat[j] * sum_dy_xhat[c]) *
                                         gs[c] * inv_std[c] / n;
                        dx[j] += static_cast<T>(v);
                      }
                    }
                  });
  }
  return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng, Graph<T>* graph) {
  require_defined(x.defined(), "dropout");
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::infer || rate == 0.0) return x;

  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = rng.uniform() < rate ? T{0} : scale;
  auto out = Tensor<T>::zeros(x.shape());
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < mask.size(); ++i) ys[i] = xs[i] * mask[i];

  if (tracks(graph, {&x})) {
    out.set_requires_grad(true);
    graph->record("dropout", {x}, out, [x, out, mask = std::move(mask)]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      for (std::size_t i = 0; i < mask.size(); ++i) dx[i] += dy[i] * mask[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> global_pool(const Tensor<T>& x, PoolKind kind, Graph<T>* graph) {
  require_defined(x.defined(), "global_pool");
  const auto [batch, steps, channels] = sequence_dims(x, "global_pool");
  if (steps == 0) throw DimensionError("global_pool: empty time axis in " + to_string(x.shape()));
  const Shape out_shape = x.rank() == 2 ? Shape{channels} : Shape{batch, channels};
  auto out = Tensor<T>::zeros(out_shape);
  auto ys = out.data();
  const auto xs = x.data();
  std::vector<std::size_t> argmax;

  if (kind == PoolKind::avg) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t t = 0; t < steps; ++t) acc += xs[(b * steps + t) * channels + c];
        ys[b * channels + c] = static_cast<T>(acc / static_cast<double>(steps));
      }
    }
  } else {
    argmax.assign(batch * channels, 0);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < steps; ++t) {
          if (xs[(b * steps + t) * channels + c] > xs[(b * steps + best) * channels + c]) best = t;
        }
        argmax[b * channels + c] = best;
        ys[b * channels + c] = xs[(b * steps + best) * channels + c];
      }
    }
  }

  if (tracks(graph, {&x})) {
    out.set_requires_grad(true);
    graph->record(kind == PoolKind::avg ? "global_avg_pool" : "global_max_pool", {x}, out,
                  [x, out, kind, argmax = std::move(argmax), batch = batch, steps = steps,
                   channels = channels]() mutable {
                    auto dx = x.ensure_grad();
                    const auto dy = out.grad();
                    for (std::size_t b = 0; b < batch; ++b) {
                      for (std::size_t c = 0; c < channels; ++c) {
                        const T g = dy[b * channels + c];
                        if (kind == PoolKind::max) {
                          dx[(b * steps + argmax[b * channels + c]) * channels + c] += g;
                        } else {
                          const T share = g / static_cast<T>(steps);
                          for (std::size_t t = 0; t < steps; ++t)
                            dx[(b * steps + t) * channels + c] += share;
                        }
                      }
                    }
                  });
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Graph<T>* graph) {
  require_defined(x.defined(), "relu");
  auto out = Tensor<T>::zeros(x.shape());
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i] > T{0} ? xs[i] : T{0};

  if (tracks(graph, {&x})) {
    out.set_requires_grad(true);
    graph->record("relu", {x}, out, [x, out]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      const auto xs = x.data();
      for (std::size_t i = 0; i < dx.size(); ++i)
        if (xs[i] > T{0}) dx[i] += dy[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, Graph<T>* graph) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  for (const auto& p : parts) require_defined(p.defined(), "concat");
  const Shape& first = parts.front().shape();
  if (first.empty()) throw DimensionError("concat: scalar input");
  Shape lead(first.begin(), first.end() - 1);
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      throw DimensionError("concat: leading dimensions differ between " + to_string(first) +
                           " and " + to_string(s));
    }
    total += s.back();
  }
  const std::size_t rows = numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  auto out = Tensor<T>::zeros(out_shape);
  auto ys = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape().back();
    const auto xs = p.data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(xs.data() + r * w, w, ys.data() + r * total + offset);
    offset += w;
  }

  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (graph != nullptr && any) {
    out.set_requires_grad(true);
    graph->record("concat", parts, out, [parts, out, rows, total]() mutable {
      const auto dy = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t w = p.shape().back();
        if (p.requires_grad()) {
          auto dx = p.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) dx[r * w + c] += dy[r * total + offset + c];
        }
        offset += w;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_last_k(const Tensor<T>& x, std::size_t k, Graph<T>* graph) {
  require_defined(x.defined(), "slice_last_k");
  const auto [batch, steps, channels] = sequence_dims(x, "slice_last_k");
  if (k == 0 || k > steps) {
    throw DimensionError("slice_last_k: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(steps) + "] for input " + to_string(x.shape()));
  }
  auto out = Tensor<T>::zeros(sequence_shape(x, batch, k, channels));
  const auto xs = x.data();
  auto ys = out.data();
  const std::size_t start = steps - k;
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(xs.data() + (b * steps + start) * channels, k * channels,
                ys.data() + b * k * channels);
  }

  if (tracks(graph, {&x})) {
    out.set_requires_grad(true);
    graph->record("slice_last_k", {x}, out,
                  [x, out, batch = batch, steps = steps, channels = channels, k, start]() mutable {
                    auto dx = x.ensure_grad();
                    const auto dy = out.grad();
                    for (std::size_t b = 0; b < batch; ++b)
                      for (std::size_t i = 0; i < k * channels; ++i)
                        dx[(b * steps + start) * channels + i] += dy[b * k * channels + i];
                  });
  }
  return out;
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& x, Graph<T>* graph) {
  require_defined(x.defined(), "flatten");
  if (x.rank() < 2) throw DimensionError("flatten: expected rank >= 2, got " + to_string(x.shape()));
  const std::size_t batch = x.dim(0);
  auto out = Tensor<T>(Shape{batch, x.size() / std::max<std::size_t>(batch, 1)},
                       std::vector<T>(x.data().begin(), x.data().end()));
  if (tracks(graph, {&x})) {
    out.set_requires_grad(true);
    graph->record("flatten", {x}, out, [x, out]() mutable {
      auto dx = x.ensure_grad();
      const auto dy = out.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target, Graph<T>* graph) {
  require_defined(prediction.defined() && target.defined(), "mse_loss");
  if (prediction.shape() != target.shape()) {
    throw DimensionError("mse_loss: prediction " + to_string(prediction.shape()) +
                         " vs target " + to_string(target.shape()));
  }
  const auto p = prediction.data();
  const auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - t[i];
    acc += d * d;
  }
  const std::size_t n = std::max<std::size_t>(p.size(), 1);
  auto out = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));

  if (tracks(graph, {&prediction, &target})) {
    out.set_requires_grad(true);
    graph->record("mse_loss", {prediction, target}, out, [prediction, target, out, n]() mutable {
      const T g = out.grad()[0] * T{2} / static_cast<T>(n);
      const auto p = prediction.data();
      const auto t = target.data();
      if (prediction.requires_grad()) {
        auto dp = prediction.ensure_grad();
        for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += g * (p[i] - t[i]);
      }
      if (target.requires_grad()) {
        auto dt = target.ensure_grad();
        for (std::size_t i = 0; i < dt.size(); ++i) dt[i] -= g * (p[i] - t[i]);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x, Graph<T>* graph) {
  require_defined(x.defined(), "sum");
  double acc = 0.0;
  for (const T v : x.data()) acc += v;
  auto out = Tensor<T>::scalar(static_cast<T>(acc));
  if (tracks(graph, {&x})) {
    out.set_requires_grad(true);
    graph->record("sum", {x}, out, [x, out]() mutable {
      const T g = out.grad()[0];
      for (auto& d : x.ensure_grad()) d += g;
    });
  }
  return out;
}

#define LADBNET_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, Graph<T>*);                     \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&, Graph<T>*);                   \
  template Tensor<T> causal_conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                   std::size_t, Graph<T>*);                                     \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                BatchNormState<T>&, Mode, const BatchNormOptions&, Graph<T>*);  \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, Rng&, Graph<T>*);                  \
  template Tensor<T> global_pool(const Tensor<T>&, PoolKind, Graph<T>*);                        \
  template Tensor<T> relu(const Tensor<T>&, Graph<T>*);                                         \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, Graph<T>*);                          \
  template Tensor<T> slice_last_k(const Tensor<T>&, std::size_t, Graph<T>*);                    \
  template Tensor<T> flatten(const Tensor<T>&, Graph<T>*);                                      \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&, Graph<T>*);                   \
  template Tensor<T> sum(const Tensor<T>&, Graph<T>*);

LADBNET_INSTANTIATE_OPS(float)
LADBNET_INSTANTIATE_OPS(double)

#undef LADBNET_INSTANTIATE_OPS

}  // namespace ladbnet::nn
