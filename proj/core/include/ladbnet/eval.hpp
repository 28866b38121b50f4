#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ladbnet/dataset.hpp"
#include "ladbnet/pipeline.hpp"

namespace ladbnet {

/// 1h, 2h, 4h, 8h and 12h ahead at 10-minute resolution.
inline constexpr std::array<std::size_t, 5> kReportHorizons{6, 12, 24, 48, 72};

enum class HorizonMode {
  cumulative,  // pool prediction steps 1..k
  per_step,    // step k alone
};
std::string_view to_string(HorizonMode mode);

/// Denormalized forecasts for every window of one split, row-major
/// [windows x horizon].
struct ForecastSet {
  std::size_t windows = 0;
  std::size_t horizon = 0;
  std::vector<double> predicted;
  std::vector<double> actual;
  std::vector<Timestamp> target_times;
};

ForecastSet collect_forecasts(const Predictor& predictor, const WindowedDataset& data, Split split,
                              const MinMaxScaler& scaler, std::size_t batch_size = 128);

/// Same time yesterday: step t+h is predicted by kW at t+h-144.
ForecastSet seasonal_naive(const WindowedDataset& data, Split split, std::size_t period = 144);

struct HorizonMetrics {
  std::size_t steps = 0;
  double mape = 0.0;
  double r2 = 0.0;
};

struct ForecastReport {
  std::string model;
  HorizonMode mode = HorizonMode::cumulative;
  std::size_t windows = 0;
  std::vector<HorizonMetrics> horizons;
  /// MAPE over the first-hour predictions, split by the target's day type.
  double weekday_mape = 0.0;
  double weekend_mape = 0.0;

  const HorizonMetrics& at(std::size_t steps) const;
};

ForecastReport summarize(const ForecastSet& forecasts, std::string model_name,
                         HorizonMode mode = HorizonMode::cumulative,
                         std::span<const std::size_t> horizons = kReportHorizons);

ForecastReport multi_horizon_report(const Predictor& predictor, const WindowedDataset& data,
                                    Split split, const MinMaxScaler& scaler,
                                    std::string model_name,
                                    HorizonMode mode = HorizonMode::cumulative);

std::string report_to_json(const ForecastReport& report);
std::string report_to_text(const ForecastReport& report);

struct AblationRow {
  Variant variant;
  std::size_t params = 0;
  ForecastReport report;
};
std::string ablation_to_json(const std::vector<AblationRow>& rows);
std::string ablation_to_text(const std::vector<AblationRow>& rows);

// ---------------------------------------------------------------------------
// Missing-data robustness

struct RobustnessOptions {
  std::vector<double> rates{0.05, 0.10, 0.20};
  std::uint64_t seed = 42;
  std::size_t steps = 6;  // metric horizon (cumulative)
  std::size_t window_stride = 1;
};

struct RobustnessEntry {
  double rate = 0.0;
  std::size_t masked_rows = 0;
  double mape = 0.0;
  double delta = 0.0;  // mape - clean mape, in points
};

struct RobustnessReport {
  double clean_mape = 0.0;
  std::size_t windows = 0;
  std::vector<RobustnessEntry> entries;
};

/// Masks a seeded random fraction of interior rows of `frame` (all three
/// sensor values), re-imputes linearly, rebuilds features and windows, and
/// scores forecasts against the clean targets. Each row draws one uniform
/// score, so the mask at a lower rate is a subset of the mask at a higher one.
RobustnessReport robustness_missing(const Predictor& predictor, const RawFrame& frame,
                                    const MinMaxScaler& scaler, const HolidayCalendar& calendar,
                                    const FeatureOptions& features, const WindowShape& shape,
                                    const RobustnessOptions& options = {});

/// Rows of `frame` whose score falls below `rate`; endpoints never masked.
std::vector<std::size_t> missing_mask(std::size_t rows, double rate, std::uint64_t seed);

std::string robustness_to_json(const RobustnessReport& report);

// ---------------------------------------------------------------------------
// Latency

struct LatencyReport {
  std::string model_kind;
  std::size_t iterations = 0;
  std::size_t warmup = 0;
  bool batch_mode = false;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double throughput = 0.0;  // predictions per second
};

/// Times `run_once` (one end-to-end prediction) `iterations` times after
/// `warmup` untimed calls. iterations < 100 raises ConfigError.
LatencyReport latency_bench(const std::function<void()>& run_once, std::size_t iterations,
                            std::size_t warmup, std::string model_kind);

/// Builds a report from raw per-call durations in milliseconds.
LatencyReport latency_from_samples(std::vector<double> samples_ms, std::string model_kind);

std::string latency_to_json(const LatencyReport& report);

}  // namespace ladbnet
