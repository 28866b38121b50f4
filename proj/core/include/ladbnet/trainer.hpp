#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ladbnet/dataset.hpp"
#include "ladbnet/model.hpp"

namespace ladbnet {

struct TrainConfig {
  double learning_rate = 0.0005;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 400;
  std::size_t early_stop_patience = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 42;
  bool shuffle = true;
  /// 0 = every training batch each epoch; otherwise the first N batches of
  /// the epoch's shuffled order.
  std::size_t max_batches_per_epoch = 0;
  /// Validation uses every k-th validation window (1 = all of them).
  std::size_t validation_stride = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch;  // 1-based
  double train_loss;
  double val_loss;
  double seconds;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 before the first epoch
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

/// Bias-corrected Adam state for one parameter list.
class AdamState {
 public:
  explicit AdamState(const std::vector<NamedTensor>& params);
  std::size_t step() const { return step_; }

  /// One update from the gradients currently stored on `params`. A non-finite
  /// gradient raises NumericError naming the parameter, before any value is
  /// modified.
  void apply(std::vector<NamedTensor>& params, const TrainConfig& config);

 private:
  std::vector<std::vector<float>> m_, v_;
  std::size_t step_ = 0;
};

/// Epoch-level progress callback (called after each epoch).
using ProgressFn = std::function<void(const EpochRecord&)>;

/// Splits a shuffled index list into mini-batches; a trailing batch of size 1
/// is merged into the previous one.
std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::size_t batch_size);

/// Mean squared error over the validation windows in infer mode.
double evaluate_loss(const Model& model, const WindowedDataset& data, Split split,
                     std::size_t stride = 1);

/// Trains in place. On return `model` holds the weights of the epoch with
/// the lowest validation loss.
TrainHistory train(Model& model, const WindowedDataset& data, const TrainConfig& config,
                   const ProgressFn& progress = {});

std::string history_to_json(const TrainHistory& history);

}  // namespace ladbnet
