#include "ladbnet/pipeline.hpp"

#include <algorithm>
#include <string>

#include "ladbnet/error.hpp"

namespace ladbnet {

Predictor make_predictor(const Model& model) {
  return [model](const nn::Tensor<float>& batch) { return model.predict(batch); };
}

Predictor make_predictor(const QuantizedModel& model) {
  return [model](const nn::Tensor<float>& batch) { return model.predict(batch); };
}

PreparedData prepare_dataset(RawFrame raw, const HolidayCalendar& calendar,
                             const FeatureOptions& options, const SplitRatios& ratios,
                             const WindowShape& shape, const ScalerParams* scaler) {
  PreparedData d;
  d.imputed_rows = static_cast<std::size_t>(
      std::count_if(raw.records.begin(), raw.records.end(),
                    [](const RawRecord& r) { return !r.complete(); }));
  d.raw = d.imputed_rows > 0 ? impute_linear(raw) : std::move(raw);
  d.features = assemble(d.raw, calendar, options);
  d.ranges = chrono_split(d.features.valid_rows(), ratios, shape.span(), d.features.valid_from);
  if (scaler) {
    d.scaler = MinMaxScaler(*scaler);
  } else {
    const auto& train = d.ranges[Split::train];
    d.scaler.fit(d.features, train.begin, train.end);
  }
  d.windows = make_windows(d.features, d.scaler, d.ranges, shape);
  return d;
}

RawFrame segment_frame(const PreparedData& data, Split split) {
  const auto& seg = data.ranges[split];
  const std::size_t from = seg.begin >= kMaxLag ? seg.begin - kMaxLag : 0;
  RawFrame frame;
  frame.records.assign(data.raw.records.begin() + static_cast<std::ptrdiff_t>(from),
                       data.raw.records.begin() + static_cast<std::ptrdiff_t>(seg.end));
  return frame;
}

nn::Tensor<float> representative_windows(const WindowedDataset& data, Split split,
                                         std::size_t count) {
  const std::size_t n = data.size(split);
  if (n == 0 || count == 0) {
    throw CalibrationError("no " + std::string(to_string(split)) + " windows to sample from");
  }
  count = std::min(count, n);
  std::vector<std::size_t> picks(count);
  for (std::size_t i = 0; i < count; ++i) picks[i] = i * n / count;
  const auto& shape = data.shape();
  std::vector<float> inputs(count * shape.input_steps * kInputCount), targets(count * shape.horizon);
  data.gather(split, picks, inputs, targets);
  return nn::Tensor<float>({count, shape.input_steps, kInputCount}, std::move(inputs));
}

std::size_t min_history_records(const ModelConfig& config) { return kMaxLag + config.seq_len; }

Forecaster::Forecaster(Model model, MinMaxScaler scaler, HolidayCalendar calendar,
                       FeatureOptions options)
    : float_(std::move(model)),
      scaler_(std::move(scaler)),
      calendar_(std::move(calendar)),
      options_(options) {
  if (!scaler_.fitted()) throw StateError("forecaster needs a fitted scaler");
}

Forecaster::Forecaster(QuantizedModel model, MinMaxScaler scaler, HolidayCalendar calendar,
                       FeatureOptions options)
    : quantized_(std::move(model)),
      scaler_(std::move(scaler)),
      calendar_(std::move(calendar)),
      options_(options) {
  if (!scaler_.fitted()) throw StateError("forecaster needs a fitted scaler");
}

const ModelConfig& Forecaster::config() const {
  return float_ ? float_->config() : quantized_->config();
}

ForecastResult Forecaster::forecast(std::span<const RawRecord> records) const {
  const std::size_t need = min_records();
  if (records.size() < need) {
    throw InsufficientDataError("at least " + std::to_string(need) + " records are required (" +
                                std::to_string(kMaxLag) + " for lags + " +
                                std::to_string(config().seq_len) + " for the input window), got " +
                                std::to_string(records.size()));
  }
  RawFrame frame;
  frame.records.assign(records.end() - static_cast<std::ptrdiff_t>(need), records.end());
  for (std::size_t i = 1; i < frame.size(); ++i) {
    if (frame[i].time.seconds - frame[i - 1].time.seconds != kStepSeconds) {
      throw ContractError("records must be consecutive 10-minute steps (break before " +
                          format_timestamp(frame[i].time) + ")");
    }
  }
  if (!std::all_of(frame.records.begin(), frame.records.end(),
                   [](const RawRecord& r) { return r.complete(); })) {
    frame = impute_linear(frame);
  }
  const FeatureMatrix features = assemble(frame, calendar_, options_);

  const auto& cfg = config();
  std::vector<float> window(cfg.seq_len * kInputCount);
  const std::size_t first = features.rows - cfg.seq_len;
  for (std::size_t r = 0; r < cfg.seq_len; ++r) {
    for (std::size_t c = 0; c < kInputCount; ++c) {
      window[r * kInputCount + c] = static_cast<float>(scaler_.apply(c, features.at(first + r, c)));
    }
  }
  const nn::Tensor<float> batch({1, cfg.seq_len, kInputCount}, std::move(window));
  const auto out = float_ ? float_->predict(batch) : quantized_->predict(batch);

  ForecastResult result;
  result.first_target = Timestamp{frame.records.back().time.seconds + kStepSeconds};
  result.kw.reserve(cfg.horizon);
  for (const float v : out.data()) result.kw.push_back(scaler_.invert_target(v));
  return result;
}

}  // namespace ladbnet
