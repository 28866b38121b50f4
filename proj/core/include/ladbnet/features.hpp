#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "ladbnet/frame.hpp"

namespace ladbnet {

inline constexpr std::size_t kFeatureCount = 28;
inline constexpr std::size_t kInputCount = 27;
inline constexpr std::size_t kTargetColumn = 27;
inline constexpr std::size_t kMaxLag = 144;

/// Frozen column order of the feature table. Columns 0..26 are model inputs,
/// column 27 is the regression target.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureColumns{
    "kW",
    "DBT",
    "RH",
    "hour_sin",
    "hour_cos",
    "dayofweek_sin",
    "dayofweek_cos",
    "month_sin",
    "month_cos",
    "weekend",
    "is_holiday",
    "is_business_hours",
    "is_night",
    "is_morning_peak",
    "is_evening_peak",
    "kW_lag_6",
    "kW_lag_12",
    "kW_lag_24",
    "kW_lag_72",
    "kW_lag_144",
    "kW_rolling_mean_6",
    "kW_rolling_mean_12",
    "kW_rolling_mean_24",
    "kW_rolling_std_12",
    "kW_rolling_max_24",
    "kW_rolling_min_24",
    "temp_humidity_interaction",
    "kW_target",
};

inline constexpr std::array<std::size_t, 5> kLagSteps{6, 12, 24, 72, 144};

/// Half-open hour interval [start, end); wraps past midnight when start > end.
struct HourRange {
  double start = 0.0;
  double end = 0.0;

  bool contains(double hour) const {
    return start <= end ? (hour >= start && hour < end) : (hour >= start || hour < end);
  }
  bool operator==(const HourRange&) const = default;
};

struct FeatureOptions {
  HourRange night{22.0, 6.0};
  HourRange business_hours{8.0, 18.0};
  HourRange morning_peak{7.0, 9.0};
  HourRange evening_peak{17.0, 20.0};
  bool population_std = true;

  bool operator==(const FeatureOptions&) const = default;
};

class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  explicit HolidayCalendar(std::set<std::int64_t> days) : days_(std::move(days)) {}

  /// One ISO date per line; blank lines and '#' comments are skipped.
  /// Duplicate dates are rejected.
  static HolidayCalendar load(const std::filesystem::path& path);

  void add(std::int64_t day_number);
  bool contains(std::int64_t day_number) const { return days_.contains(day_number); }
  const std::set<std::int64_t>& days() const { return days_; }
  bool empty() const { return days_.empty(); }

 private:
  std::set<std::int64_t> days_;
};

using Column = std::vector<double>;

/// hour_sin, hour_cos, dayofweek_sin, dayofweek_cos, month_sin, month_cos.
std::array<Column, 6> cyclic_encode(const RawFrame& frame);

/// weekend, is_holiday, is_business_hours, is_night, is_morning_peak,
/// is_evening_peak.
std::array<Column, 6> contextual_flags(const RawFrame& frame, const HolidayCalendar& calendar,
                                       const FeatureOptions& options = {});

/// kW_lag_{6,12,24,72,144}; NaN where t < lag.
std::array<Column, 5> lag_features(const RawFrame& frame);

/// Trailing windows ending at t: mean 6/12/24, std 12, max 24, min 24.
/// NaN until the window is full.
std::array<Column, 6> rolling_stats(const RawFrame& frame, const FeatureOptions& options = {});

/// DBT * RH / 100.
Column interaction(const RawFrame& frame);

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t valid_from = 0;  // first row with every lag and window defined
  std::vector<Timestamp> timestamps;
  std::vector<double> values;  // row-major, rows x kFeatureCount

  double at(std::size_t row, std::size_t col) const { return values[row * kFeatureCount + col]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * kFeatureCount, kFeatureCount};
  }
  Column column(std::size_t col) const;
  std::size_t valid_rows() const { return rows - valid_from; }
};

/// Full 28-column table. Requires a complete frame on a contiguous
/// 10-minute grid with more than kMaxLag rows.
FeatureMatrix assemble(const RawFrame& frame, const HolidayCalendar& calendar,
                       const FeatureOptions& options = {});

}  // namespace ladbnet
