#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ladbnet/dataset.hpp"
#include "ladbnet/features.hpp"
#include "ladbnet/model.hpp"
#include "ladbnet/quant.hpp"

namespace ladbnet {

/// Normalized [B, seq_len, n_features] -> normalized [B, horizon].
using Predictor = std::function<nn::Tensor<float>(const nn::Tensor<float>&)>;

Predictor make_predictor(const Model& model);
Predictor make_predictor(const QuantizedModel& model);

/// A raw frame carried through imputation, features, split and windows.
struct PreparedData {
  RawFrame raw;              // after imputation
  std::size_t imputed_rows = 0;
  FeatureMatrix features;
  SplitRanges ranges;        // over feature rows, offset by valid_from
  MinMaxScaler scaler;
  WindowedDataset windows;
};

/// Fits the scaler on the training segment unless `scaler` is given.
PreparedData prepare_dataset(RawFrame raw, const HolidayCalendar& calendar,
                             const FeatureOptions& options = {}, const SplitRatios& ratios = {},
                             const WindowShape& shape = {},
                             const ScalerParams* scaler = nullptr);

/// Raw rows feeding one split segment, including the lag history in front.
RawFrame segment_frame(const PreparedData& data, Split split);

/// `count` windows spread evenly over a split, as [count, steps, features].
nn::Tensor<float> representative_windows(const WindowedDataset& data, Split split,
                                         std::size_t count);

/// Raw history needed for one forecast: the largest lag plus one input window.
std::size_t min_history_records(const ModelConfig& config);

struct ForecastResult {
  Timestamp first_target;
  std::vector<double> kw;  // one value per 10-minute step ahead
};

/// End-to-end forecaster: raw records -> features -> scaling -> model ->
/// denormalized kW. Immutable after construction; forecast() is safe to call
/// concurrently.
class Forecaster {
 public:
  Forecaster(Model model, MinMaxScaler scaler, HolidayCalendar calendar = {},
             FeatureOptions options = {});
  Forecaster(QuantizedModel model, MinMaxScaler scaler, HolidayCalendar calendar = {},
             FeatureOptions options = {});

  bool quantized() const { return quantized_.has_value(); }
  const ModelConfig& config() const;
  const MinMaxScaler& scaler() const { return scaler_; }
  std::size_t min_records() const { return min_history_records(config()); }

  /// Uses the most recent min_records() records, which must lie on a
  /// contiguous 10-minute grid. Interior missing values are interpolated.
  ForecastResult forecast(std::span<const RawRecord> records) const;

 private:
  std::optional<Model> float_;
  std::optional<QuantizedModel> quantized_;
  MinMaxScaler scaler_;
  HolidayCalendar calendar_;
  FeatureOptions options_;
};

}  // namespace ladbnet
