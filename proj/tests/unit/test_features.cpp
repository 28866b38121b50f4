#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ladbnet/dataset.hpp"
#include "ladbnet/error.hpp"
#include "ladbnet/features.hpp"

namespace ladbnet {
namespace {

RawFrame ramp_frame(std::size_t rows, Timestamp start = from_civil(2023, 1, 2)) {
  RawFrame f;
  for (std::size_t i = 0; i < rows; ++i) {
    f.records.push_back({Timestamp{start.seconds + static_cast<std::int64_t>(i) * kStepSeconds},
                         20.0 + 0.01 * static_cast<double>(i), 60.0, static_cast<double>(i)});
  }
  return f;
}

RawFrame at(std::initializer_list<Timestamp> times) {
  RawFrame f;
  for (const auto t : times) f.records.push_back({t, 24.0, 60.0, 50.0});
  return f;
}

std::size_t col(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureColumns[i] == name) return i;
  }
  throw std::out_of_range(std::string(name));
}

TEST(Cyclic, MidnightAndSixOClock) {
  const auto enc = cyclic_encode(at({from_civil(2023, 3, 1, 0), from_civil(2023, 3, 1, 6)}));
  EXPECT_NEAR(enc[0][0], 0.0, 1e-12);
  EXPECT_NEAR(enc[1][0], 1.0, 1e-12);
  EXPECT_NEAR(enc[0][1], 1.0, 1e-12);
  EXPECT_NEAR(enc[1][1], 0.0, 1e-12);
}

TEST(Cyclic, LastStepOfDayIsCloseToMidnight) {
  const auto enc = cyclic_encode(at({from_civil(2023, 3, 1, 23, 50), from_civil(2023, 3, 2, 0)}));
  const double d = std::hypot(enc[0][0] - enc[0][1], enc[1][0] - enc[1][1]);
  EXPECT_LT(d, 0.05);
}

TEST(Cyclic, EveryPairHasUnitNorm) {
  const auto frame = ramp_frame(3000);
  const auto enc = cyclic_encode(frame);
  for (std::size_t r = 0; r < frame.size(); ++r) {
    for (std::size_t p = 0; p < 3; ++p) {
      const double s = enc[2 * p][r], c = enc[2 * p + 1][r];
      EXPECT_NEAR(s * s + c * c, 1.0, 1e-9);
    }
  }
}

TEST(Flags, WeekendPeaksAndHolidays) {
  // 2023-03-04 is a Saturday, 2023-03-01 a Wednesday.
  const auto sat = from_civil(2023, 3, 4, 10);
  const auto wed = from_civil(2023, 3, 1, 8);
  HolidayCalendar cal;
  cal.add(to_civil(wed).day_number);
  const auto flags = contextual_flags(at({sat, wed}), {});
  EXPECT_EQ(flags[0][0], 1.0);  // weekend
  EXPECT_EQ(flags[0][1], 0.0);
  EXPECT_EQ(flags[4][1], 1.0);  // morning peak
  EXPECT_EQ(flags[2][1], 1.0);  // business hours
  EXPECT_EQ(flags[2][0], 0.0);
  const auto hol = contextual_flags(at({sat, wed}), cal);
  EXPECT_EQ(hol[1][1], 1.0);
  EXPECT_EQ(hol[2][1], 0.0);  // no business hours on a holiday
}

TEST(Flags, NightWrapsPastMidnight) {
  const auto flags = contextual_flags(
      at({from_civil(2023, 3, 1, 22), from_civil(2023, 3, 2, 5, 50), from_civil(2023, 3, 2, 6)}), {});
  EXPECT_EQ(flags[3][0], 1.0);
  EXPECT_EQ(flags[3][1], 1.0);
  EXPECT_EQ(flags[3][2], 0.0);
}

TEST(Lags, ShiftIdentityOnARamp) {
  const auto frame = ramp_frame(400);
  const auto lags = lag_features(frame);
  for (std::size_t k = 0; k < kLagSteps.size(); ++k) {
    for (std::size_t t = 0; t < frame.size(); ++t) {
      if (t < kLagSteps[k]) {
        EXPECT_TRUE(std::isnan(lags[k][t]));
      } else {
        EXPECT_EQ(lags[k][t], frame[t - kLagSteps[k]].kw);
      }
    }
  }
}

TEST(Rolling, RampAndAlternatingSeries) {
  auto frame = ramp_frame(24);
  for (std::size_t i = 0; i < 24; ++i) frame[i].kw = static_cast<double>(i + 1);
  const auto roll = rolling_stats(frame);
  EXPECT_DOUBLE_EQ(roll[2][23], 12.5);
  EXPECT_EQ(roll[4][23], 24.0);
  EXPECT_EQ(roll[5][23], 1.0);
  EXPECT_TRUE(std::isnan(roll[2][22]));

  for (std::size_t i = 0; i < 24; ++i) frame[i].kw = i % 2 ? 1.0 : -1.0;
  EXPECT_NEAR(rolling_stats(frame)[3][23], 1.0, 1e-12);
  FeatureOptions sample;
  sample.population_std = false;
  EXPECT_NEAR(rolling_stats(frame, sample)[3][23], std::sqrt(12.0 / 11.0), 1e-12);
}

TEST(Rolling, ConstantSeriesHasZeroSpread) {
  auto frame = ramp_frame(30);
  for (auto& r : frame.records) r.kw = 42.0;
  const auto roll = rolling_stats(frame);
  for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(roll[c][29], c == 3 ? 0.0 : 42.0, 1e-12);
}

TEST(Interaction, FormulaCases) {
  RawFrame f = at({from_civil(2023, 1, 1), from_civil(2023, 1, 1, 0, 10), from_civil(2023, 1, 1, 0, 20)});
  f[0].dbt = 0.0;
  f[1].dbt = 24.3;
  f[1].rh = 68.5;
  f[2].dbt = 31.0;
  f[2].rh = 100.0;
  const auto x = interaction(f);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_NEAR(x[1], 16.6455, 1e-12);
  EXPECT_EQ(x[2], 31.0);
}

TEST(Assemble, ColumnsValidRowsAndInvariants) {
  const auto frame = synth_generate(2000, 3);
  const auto m = assemble(frame, {});
  EXPECT_EQ(m.values.size(), m.rows * kFeatureCount);
  EXPECT_EQ(m.valid_from, kMaxLag);
  EXPECT_EQ(m.valid_rows(), 2000u - 144u);
  for (std::size_t r = m.valid_from; r < m.rows; ++r) {
    EXPECT_LE(m.at(r, col("kW_rolling_min_24")), m.at(r, col("kW_rolling_mean_24")) + 1e-12);
    EXPECT_LE(m.at(r, col("kW_rolling_mean_24")), m.at(r, col("kW_rolling_max_24")) + 1e-12);
    EXPECT_EQ(m.at(r, col("is_holiday")), 0.0);
    EXPECT_EQ(m.at(r, col("kW_target")), m.at(r, col("kW")));
    for (std::size_t c = col("weekend"); c <= col("is_evening_peak"); ++c) {
      EXPECT_TRUE(m.at(r, c) == 0.0 || m.at(r, c) == 1.0);
    }
    for (std::size_t c = 0; c < kFeatureCount; ++c) EXPECT_TRUE(std::isfinite(m.at(r, c)));
  }
  const auto again = assemble(frame, {});
  EXPECT_EQ(std::memcmp(m.values.data(), again.values.data(), m.values.size() * sizeof(double)), 0);
}

TEST(Assemble, TooShortOrIncompleteFrames) {
  EXPECT_THROW(assemble(ramp_frame(144), {}), InsufficientDataError);
  auto gap = ramp_frame(200);
  gap[50].kw = std::nan("");
  EXPECT_THROW(assemble(gap, {}), ContractError);
}

TEST(Assemble, FeatureColumnOrderIsFrozen) {
  EXPECT_EQ(kFeatureColumns.size(), 28u);
  EXPECT_EQ(kFeatureColumns.front(), "kW");
  EXPECT_EQ(kFeatureColumns[kTargetColumn], "kW_target");
  EXPECT_EQ(col("kW_lag_6"), 15u);
  EXPECT_EQ(col("temp_humidity_interaction"), 26u);
}

TEST(Holidays, LoadSkipsCommentsAndRejectsDuplicates) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto good = dir / "ladbnet_holidays_ok.txt";
  std::ofstream(good) << "# comment\n2023-01-01\n\n2023-05-01\n";
  const auto cal = HolidayCalendar::load(good);
  EXPECT_EQ(cal.days().size(), 2u);
  EXPECT_TRUE(cal.contains(parse_date("2023-05-01")));
  const auto dup = dir / "ladbnet_holidays_dup.txt";
  std::ofstream(dup) << "2023-01-01\n2023-01-01\n";
  EXPECT_THROW(HolidayCalendar::load(dup), ParseError);
  std::filesystem::remove(good);
  std::filesystem::remove(dup);
}

}  // namespace
}  // namespace ladbnet
