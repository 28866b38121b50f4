#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ladbnet {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double value);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline constexpr double kMapeFloorKw = 1e-6;

/// Mean absolute percentage error in percent. Any |actual| below `floor`
/// raises GuardError.
double mape(std::span<const double> actual, std::span<const double> predicted,
            double floor = kMapeFloorKw);

/// 1 - SS_res / SS_tot. A constant `actual` raises NumericError.
double r_squared(std::span<const double> actual, std::span<const double> predicted);

/// Nearest-rank percentile (p in (0, 100]) of an ascending sample.
double nearest_rank(std::span<const double> sorted, double p);

}  // namespace ladbnet
