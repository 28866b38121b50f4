#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ladbnet/features.hpp"
#include "ladbnet/frame.hpp"

namespace ladbnet {

// ---------------------------------------------------------------------------
// Ingestion

/// Reads a `datetime,DBT,RH,kW` CSV. Rows are sorted by time; grid gaps are
/// materialized as NaN rows; empty or "NaN" cells are treated as missing.
RawFrame load_csv(const std::filesystem::path& path);
RawFrame parse_csv(std::string_view text, std::string_view source = "<memory>");
void write_csv(const std::filesystem::path& path, const RawFrame& frame);
std::string format_csv(const RawFrame& frame);

/// Interior gaps filled by linear interpolation on the time grid, per
/// column. Leading or trailing gaps raise InsufficientDataError.
RawFrame impute_linear(const RawFrame& frame);

// ---------------------------------------------------------------------------
// Scaling

struct ScalerParams {
  std::vector<std::string> columns;
  std::vector<double> min;
  std::vector<double> max;

  bool is_constant(std::size_t col) const { return max[col] == min[col]; }
  bool operator==(const ScalerParams&) const = default;
};

/// Per-column min-max map x' = (x - min) / (max - min); constant columns map
/// to 0. Values outside the fitted range are not clipped.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  explicit MinMaxScaler(ScalerParams params);

  /// Fits on rows [begin, end) of `features`.
  void fit(const FeatureMatrix& features, std::size_t begin, std::size_t end);
  bool fitted() const { return fitted_; }
  const ScalerParams& params() const;

  double apply(std::size_t col, double value) const;
  double invert(std::size_t col, double value) const;
  double invert_target(double value) const { return invert(kTargetColumn, value); }

 private:
  void require_fitted() const;

  ScalerParams params_;
  bool fitted_ = false;
};

// ---------------------------------------------------------------------------
// Chronological split and windows

enum class Split { train = 0, val = 1, test = 2 };
std::string_view to_string(Split split);

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

struct SplitRanges {
  std::array<RowRange, 3> ranges;
  const RowRange& operator[](Split s) const { return ranges[static_cast<int>(s)]; }
};

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

/// Splits `rows` consecutive rows starting at `offset`: floor(train),
/// floor(val), remainder to test. Each segment must hold at least
/// `min_segment` rows.
SplitRanges chrono_split(std::size_t rows, const SplitRatios& ratios = {},
                         std::size_t min_segment = 216, std::size_t offset = 0);

struct WindowShape {
  std::size_t input_steps = 144;
  std::size_t horizon = 72;
  std::size_t span() const { return input_steps + horizon; }
};

/// Stride-1 windows inside each split segment. Window i of a segment starts
/// at row `start(split, i)`: inputs are rows [start, start + input_steps)
/// and targets the next `horizon` target values. No window crosses a
/// segment boundary.
class WindowedDataset {
 public:
  std::size_t size(Split split) const;
  /// Feature-row index of the first input step of window i.
  std::size_t start(Split split, std::size_t i) const;
  const WindowShape& shape() const { return shape_; }
  const RowRange& segment(Split split) const { return segments_[static_cast<int>(split)]; }

  /// Normalized inputs, contiguous [input_steps x kInputCount].
  std::span<const float> input(Split split, std::size_t i) const;
  /// Normalized target values, [horizon].
  std::span<const float> target(Split split, std::size_t i) const;
  /// Raw kW of the target steps, [horizon].
  std::span<const double> actual_kw(Split split, std::size_t i) const;
  /// Raw kW over the whole window (inputs then targets), [span].
  std::span<const double> kw_history(Split split, std::size_t i) const;
  Timestamp target_time(Split split, std::size_t i, std::size_t step) const;

  /// Copies the listed windows into [n, input_steps, kInputCount] and
  /// [n, horizon] buffers.
  void gather(Split split, std::span<const std::size_t> windows, std::span<float> inputs,
              std::span<float> targets) const;

  friend WindowedDataset make_windows(const FeatureMatrix& features, const MinMaxScaler& scaler,
                                      const SplitRanges& split, const WindowShape& shape);

 private:
  WindowShape shape_;
  std::array<RowRange, 3> segments_{};
  std::array<std::size_t, 3> counts_{};
  std::vector<float> inputs_;   // rows x kInputCount, normalized
  std::vector<float> targets_;  // rows, normalized target column
  std::vector<double> kw_;      // rows, raw target column
  std::vector<Timestamp> times_;
};

/// Segments shorter than one window are skipped with a warning.
WindowedDataset make_windows(const FeatureMatrix& features, const MinMaxScaler& scaler,
                             const SplitRanges& split, const WindowShape& shape = {});

// ---------------------------------------------------------------------------
// Synthetic data

/// Shape of the generated building load. Defaults reproduce the mean and
/// spread of a medium tertiary building at 10-minute resolution.
struct SynthProfile {
  std::string start = "2023-01-01 00:00:00";
  double base_kw = 53.0;
  double business_uplift_kw = 62.0;
  double daily_amplitude_kw = 8.0;
  double weekly_amplitude_kw = 3.0;
  double weekend_factor = 0.55;
  double temp_coupling_kw_per_c = 2.2;
  double ar_coefficient = 0.985;
  double ar_noise_kw = 1.6;
  double noise_kw = 1.5;
  double clamp_floor_kw = 5.0;
  double dbt_mean = 24.3;
  double dbt_daily_amplitude = 3.2;
  double dbt_annual_amplitude = 2.8;
  double dbt_min = 15.2;
  double dbt_max = 32.8;
  double rh_mean = 68.5;
  double rh_min = 32.0;
  double rh_max = 95.0;
};

RawFrame synth_generate(std::size_t rows, std::uint64_t seed, const SynthProfile& profile = {});

}  // namespace ladbnet
