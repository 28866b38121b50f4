#include "ladbnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "ladbnet/error.hpp"

namespace ladbnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double fractional_hour(const CivilTime& c) {
  return c.hour + c.minute / 60.0 + c.second / 3600.0;
}

}  // namespace

HolidayCalendar HolidayCalendar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open holiday file " + path.string());
  HolidayCalendar calendar;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string_view date(line.data() + first, last - first + 1);
    std::int64_t day = 0;
    try {
      day = parse_date(date);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (calendar.contains(day)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate date " +
                       std::string(date));
    }
    calendar.add(day);
  }
  return calendar;
}

void HolidayCalendar::add(std::int64_t day_number) { days_.insert(day_number); }

std::array<Column, 6> cyclic_encode(const RawFrame& frame) {
  std::array<Column, 6> out;
  for (auto& c : out) c.resize(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const CivilTime c = to_civil(frame[i].time);
    const double hour = kTwoPi * fractional_hour(c) / 24.0;
    const double dow = kTwoPi * c.weekday / 7.0;
    const double month = kTwoPi * (c.month - 1) / 12.0;
    out[0][i] = std::sin(hour);
    out[1][i] = std::cos(hour);
    out[2][i] = std::sin(dow);
    out[3][i] = std::cos(dow);
    out[4][i] = std::sin(month);
    out[5][i] = std::cos(month);
  }
  return out;
}

std::array<Column, 6> contextual_flags(const RawFrame& frame, const HolidayCalendar& calendar,
                                       const FeatureOptions& options) {
  std::array<Column, 6> out;
  for (auto& c : out) c.resize(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const CivilTime c = to_civil(frame[i].time);
    const double hour = fractional_hour(c);
    const bool weekend = c.weekday >= 5;
    const bool holiday = calendar.contains(c.day_number);
    out[0][i] = weekend ? 1.0 : 0.0;
    out[1][i] = holiday ? 1.0 : 0.0;
    out[2][i] = (!weekend && !holiday && options.business_hours.contains(hour)) ? 1.0 : 0.0;
    out[3][i] = options.night.contains(hour) ? 1.0 : 0.0;
    out[4][i] = options.morning_peak.contains(hour) ? 1.0 : 0.0;
    out[5][i] = options.evening_peak.contains(hour) ? 1.0 : 0.0;
  }
  return out;
}

std::array<Column, 5> lag_features(const RawFrame& frame) {
  std::array<Column, 5> out;
  for (std::size_t j = 0; j < kLagSteps.size(); ++j) {
    const std::size_t lag = kLagSteps[j];
    out[j].assign(frame.size(), kNaN);
    for (std::size_t t = lag; t < frame.size(); ++t) out[j][t] = frame[t - lag].kw;
  }
  return out;
}

std::array<Column, 6> rolling_stats(const RawFrame& frame, const FeatureOptions& options) {
  const std::size_t n = frame.size();
  std::array<Column, 6> out;
  for (auto& c : out) c.assign(n, kNaN);

  auto window_mean = [&](std::size_t t, std::size_t w) {
    double acc = 0.0;
    for (std::size_t i = t + 1 - w; i <= t; ++i) acc += frame[i].kw;
    return acc / static_cast<double>(w);
  };

  for (std::size_t t = 0; t < n; ++t) {
    if (t + 1 >= 6) out[0][t] = window_mean(t, 6);
    if (t + 1 >= 12) {
      const double mean = window_mean(t, 12);
      double ss = 0.0;
      for (std::size_t i = t + 1 - 12; i <= t; ++i) ss += (frame[i].kw - mean) * (frame[i].kw - mean);
      out[1][t] = mean;
      out[3][t] = std::sqrt(ss / (options.population_std ? 12.0 : 11.0));
    }
    if (t + 1 >= 24) {
      double lo = frame[t].kw, hi = frame[t].kw;
      for (std::size_t i = t + 1 - 24; i <= t; ++i) {
        lo = std::min(lo, frame[i].kw);
        hi = std::max(hi, frame[i].kw);
      }
      // Summation rounding can push the mean a ulp outside [min, max].
      out[2][t] = std::clamp(window_mean(t, 24), lo, hi);
      out[4][t] = hi;
      out[5][t] = lo;
    }
  }
  return out;
}

Column interaction(const RawFrame& frame) {
  Column out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = frame[i].dbt * frame[i].rh / 100.0;
  return out;
}

Column FeatureMatrix::column(std::size_t col) const {
  Column out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, col);
  return out;
}

FeatureMatrix assemble(const RawFrame& frame, const HolidayCalendar& calendar,
                       const FeatureOptions& options) {
  if (frame.size() <= kMaxLag) {
    throw InsufficientDataError("feature assembly needs at least " + std::to_string(kMaxLag + 1) +
                                " rows, got " + std::to_string(frame.size()));
  }
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!frame[i].complete()) {
      throw ContractError("feature assembly needs a complete frame; row " + std::to_string(i) +
                          " (" + format_timestamp(frame[i].time) + ") has missing values");
    }
    if (i > 0 && frame[i].time.seconds - frame[i - 1].time.seconds != kStepSeconds) {
      throw ContractError("feature assembly needs a contiguous 10-minute grid; break at " +
                          format_timestamp(frame[i].time));
    }
  }

  const auto cyc = cyclic_encode(frame);
  const auto ctx = contextual_flags(frame, calendar, options);
  const auto lags = lag_features(frame);
  const auto roll = rolling_stats(frame, options);
  const auto inter = interaction(frame);

  FeatureMatrix m;
  m.rows = frame.size();
  m.valid_from = kMaxLag;
  m.timestamps.reserve(m.rows);
  m.values.resize(m.rows * kFeatureCount);
  for (std::size_t r = 0; r < m.rows; ++r) {
    m.timestamps.push_back(frame[r].time);
    double* row = m.values.data() + r * kFeatureCount;
    std::size_t c = 0;
    row[c++] = frame[r].kw;
    row[c++] = frame[r].dbt;
    row[c++] = frame[r].rh;
    for (const auto& col : cyc) row[c++] = col[r];
    for (const auto& col : ctx) row[c++] = col[r];
    for (const auto& col : lags) row[c++] = col[r];
    for (const auto& col : roll) row[c++] = col[r];
    row[c++] = inter[r];
    row[c++] = frame[r].kw;
  }
  return m;
}

}  // namespace ladbnet
