#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ladbnet/timestamp.hpp"

namespace ladbnet {

/// One logger row. Missing measurements are stored as NaN.
struct RawRecord {
  Timestamp time;
  double dbt = 0.0;  // dry-bulb temperature, degC
  double rh = 0.0;   // relative humidity, %
  double kw = 0.0;   // active power, kW

  bool complete() const { return !std::isnan(dbt) && !std::isnan(rh) && !std::isnan(kw); }
};

struct RawFrame {
  std::vector<RawRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  const RawRecord& operator[](std::size_t i) const { return records[i]; }
  RawRecord& operator[](std::size_t i) { return records[i]; }
};

}  // namespace ladbnet
