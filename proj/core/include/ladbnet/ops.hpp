#pragma once

#include <cstddef>
#include <vector>

#include "ladbnet/rng.hpp"
#include "ladbnet/tensor.hpp"

namespace ladbnet::nn {

enum class Mode { train, infer };
enum class PoolKind { avg, max };

/// Batch-norm constants. The defaults are the documented library values.
struct BatchNormOptions {
  double momentum = 0.99;
  double epsilon = 1e-3;
};

/// Running statistics of one batch-norm layer. The tensors are handles, so
/// updates in train mode land in whatever storage the caller passed in.
template <typename T>
struct BatchNormState {
  Tensor<T> mean;
  Tensor<T> var;
};

// Every op records itself on `graph` when one is given and at least one input
// requires a gradient. Ops accept an optional leading batch axis where noted.

/// a[m,k] x b[k,n] -> [m,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Graph<T>* graph = nullptr);

/// x[..., C] + bias[C].
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias, Graph<T>* graph = nullptr);

/// Causal 1-D convolution. x is [T, Cin] or [B, T, Cin]; w is [K, Cin, Cout];
/// tap k reads x[t - (K-1-k)*dilation], zero before the sequence start.
template <typename T>
Tensor<T> causal_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                        std::size_t dilation, Graph<T>* graph = nullptr);

/// Per-channel normalization over every axis but the last.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, Mode mode, const BatchNormOptions& options = {},
                     Graph<T>* graph = nullptr);

/// Inverted dropout: identity in infer mode.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng,
                  Graph<T>* graph = nullptr);

/// Reduces the time axis of [T, C] -> [C] or [B, T, C] -> [B, C].
template <typename T>
Tensor<T> global_pool(const Tensor<T>& x, PoolKind kind, Graph<T>* graph = nullptr);

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Graph<T>* graph = nullptr);

/// Concatenates along the last axis; leading dimensions must agree.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, Graph<T>* graph = nullptr);

/// Last k steps of the time axis ([T, C] or [B, T, C]).
template <typename T>
Tensor<T> slice_last_k(const Tensor<T>& x, std::size_t k, Graph<T>* graph = nullptr);

/// [B, ...] -> [B, prod(...)].
template <typename T>
Tensor<T> flatten(const Tensor<T>& x, Graph<T>* graph = nullptr);

/// Mean squared error over all elements; returns a scalar.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target,
                   Graph<T>* graph = nullptr);

/// Sum of all elements; returns a scalar.
template <typename T>
Tensor<T> sum(const Tensor<T>& x, Graph<T>* graph = nullptr);

/// Receptive field of one causal convolution layer.
constexpr std::size_t receptive_field(std::size_t kernel_size, std::size_t dilation) {
  return 1 + (kernel_size - 1) * dilation;
}

}  // namespace ladbnet::nn
