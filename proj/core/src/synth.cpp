#include <algorithm>
#include <cmath>
#include <numbers>

#include "ladbnet/dataset.hpp"
#include "ladbnet/rng.hpp"

namespace ladbnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Occupancy bump: zero outside [7h, 19h), raised cosine peaking at 13h.
double occupancy(double hour) {
  if (hour < 7.0 || hour >= 19.0) return 0.0;
  return 0.5 * (1.0 - std::cos(kTwoPi * (hour - 7.0) / 12.0));
}

}  // namespace

RawFrame synth_generate(std::size_t rows, std::uint64_t seed, const SynthProfile& p) {
  Rng rng(seed);
  const Timestamp start = parse_timestamp(p.start);
  RawFrame frame;
  frame.records.reserve(rows);

  double load_state = 0.0;  // persistent AR(1) load deviation
  double temp_state = 0.0;
  double rh_state = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const Timestamp t{start.seconds + static_cast<std::int64_t>(i) * kStepSeconds};
    const CivilTime c = to_civil(t);
    const double hour = c.hour + c.minute / 60.0;
    const double year_phase = kTwoPi * static_cast<double>(c.day_number % 365) / 365.0;
    const bool weekend = c.weekday >= 5;

    temp_state = 0.98 * temp_state + 0.25 * rng.normal();
    // Southern-hemisphere summer peaks in late January; daily peak mid-afternoon.
    double dbt = p.dbt_mean + p.dbt_annual_amplitude * std::cos(year_phase - kTwoPi * 25.0 / 365.0) +
                 p.dbt_daily_amplitude * std::sin(kTwoPi * (hour - 9.0) / 24.0) + temp_state;
    dbt = std::clamp(dbt, p.dbt_min, p.dbt_max);

    rh_state = 0.97 * rh_state + 1.6 * rng.normal();
    double rh = p.rh_mean - 2.4 * (dbt - p.dbt_mean) + rh_state;
    rh = std::clamp(rh, p.rh_min, p.rh_max);

    load_state = p.ar_coefficient * load_state + p.ar_noise_kw * rng.normal();
    const double uplift = p.business_uplift_kw * occupancy(hour) * (weekend ? p.weekend_factor : 1.0);
    double kw = p.base_kw + uplift +
                p.daily_amplitude_kw * std::sin(kTwoPi * (hour - 10.0) / 24.0) +
                p.weekly_amplitude_kw * std::cos(kTwoPi * c.weekday / 7.0) +
                p.temp_coupling_kw_per_c * (dbt - p.dbt_mean) + load_state +
                p.noise_kw * rng.normal();
    kw = std::max(kw, p.clamp_floor_kw);

    frame.records.push_back(RawRecord{t, dbt, rh, kw});
  }
  return frame;
}

}  // namespace ladbnet
