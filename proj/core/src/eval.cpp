#include "ladbnet/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "ladbnet/error.hpp"
#include "ladbnet/metrics.hpp"
#include "ladbnet/rng.hpp"

namespace ladbnet {

using nlohmann::json;

namespace {

constexpr std::size_t kFirstHourSteps = 6;

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Predictions for the listed windows, denormalized, [picks x horizon].
std::vector<double> predict_windows(const Predictor& predictor, const WindowedDataset& data,
                                    Split split, std::span<const std::size_t> picks,
                                    const MinMaxScaler& scaler, std::size_t batch_size) {
  const auto& shape = data.shape();
  std::vector<double> out;
  out.reserve(picks.size() * shape.horizon);
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t i = 0; i < picks.size(); i += batch_size) {
    const std::size_t b = std::min(batch_size, picks.size() - i);
    std::vector<float> inputs(b * shape.input_steps * kInputCount), targets(b * shape.horizon);
    data.gather(split, picks.subspan(i, b), inputs, targets);
    const auto pred = predictor(
        nn::Tensor<float>({b, shape.input_steps, kInputCount}, std::move(inputs)));
    if (pred.size() != b * shape.horizon) {
      throw DimensionError("predictor returned " + nn::to_string(pred.shape()) + " for " +
                           std::to_string(b) + " windows");
    }
    for (const float v : pred.data()) out.push_back(scaler.invert_target(v));
  }
  return out;
}

std::vector<std::size_t> all_windows(const WindowedDataset& data, Split split,
                                     std::size_t stride = 1) {
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < data.size(split); i += std::max<std::size_t>(stride, 1)) {
    picks.push_back(i);
  }
  return picks;
}

ForecastSet with_actuals(const WindowedDataset& data, Split split,
                         std::span<const std::size_t> picks, std::vector<double> predicted) {
  ForecastSet set;
  set.windows = picks.size();
  set.horizon = data.shape().horizon;
  set.predicted = std::move(predicted);
  set.actual.reserve(set.windows * set.horizon);
  set.target_times.reserve(set.windows * set.horizon);
  for (const std::size_t w : picks) {
    const auto a = data.actual_kw(split, w);
    set.actual.insert(set.actual.end(), a.begin(), a.end());
    for (std::size_t s = 0; s < set.horizon; ++s) set.target_times.push_back(data.target_time(split, w, s));
  }
  return set;
}

// Pooled MAPE over steps [0, k) of every window.
double pooled_mape(const ForecastSet& f, std::size_t k) {
  std::vector<double> a, p;
  a.reserve(f.windows * k);
  p.reserve(f.windows * k);
  for (std::size_t w = 0; w < f.windows; ++w) {
    for (std::size_t s = 0; s < k; ++s) {
      a.push_back(f.actual[w * f.horizon + s]);
      p.push_back(f.predicted[w * f.horizon + s]);
    }
  }
  return mape(a, p);
}

WindowedDataset single_segment_windows(const FeatureMatrix& features, const MinMaxScaler& scaler,
                                       const WindowShape& shape) {
  SplitRanges ranges;
  const RowRange empty{features.valid_from, features.valid_from};
  ranges.ranges = {empty, empty, RowRange{features.valid_from, features.rows}};
  return make_windows(features, scaler, ranges, shape);
}

}  // namespace

std::string_view to_string(HorizonMode mode) {
  return mode == HorizonMode::cumulative ? "cumulative" : "per_step";
}

ForecastSet collect_forecasts(const Predictor& predictor, const WindowedDataset& data, Split split,
                              const MinMaxScaler& scaler, std::size_t batch_size) {
  if (data.size(split) == 0) {
    throw InsufficientDataError(std::string(to_string(split)) + " split has no windows");
  }
  const auto picks = all_windows(data, split);
  return with_actuals(data, split, picks,
                      predict_windows(predictor, data, split, picks, scaler, batch_size));
}

ForecastSet seasonal_naive(const WindowedDataset& data, Split split, std::size_t period) {
  const auto& shape = data.shape();
  if (period > shape.input_steps || shape.horizon > period) {
    throw ContractError("seasonal period must cover the horizon and fit in the input window");
  }
  if (data.size(split) == 0) {
    throw InsufficientDataError(std::string(to_string(split)) + " split has no windows");
  }
  const auto picks = all_windows(data, split);
  std::vector<double> predicted;
  predicted.reserve(picks.size() * shape.horizon);
  for (const std::size_t w : picks) {
    const auto history = data.kw_history(split, w);
    for (std::size_t h = 0; h < shape.horizon; ++h) {
      predicted.push_back(history[shape.input_steps + h - period]);
    }
  }
  return with_actuals(data, split, picks, std::move(predicted));
}

const HorizonMetrics& ForecastReport::at(std::size_t steps) const {
  for (const auto& h : horizons) {
    if (h.steps == steps) return h;
  }
  throw ContractError("report has no " + std::to_string(steps) + "-step horizon");
}

ForecastReport summarize(const ForecastSet& f, std::string model_name, HorizonMode mode,
                         std::span<const std::size_t> horizons) {
  if (f.windows == 0) throw InsufficientDataError("no forecasts to summarize");
  ForecastReport report;
  report.model = std::move(model_name);
  report.mode = mode;
  report.windows = f.windows;
  for (const std::size_t k : horizons) {
    if (k == 0 || k > f.horizon) {
      throw ConfigError("horizon of " + std::to_string(k) + " steps outside 1.." +
                        std::to_string(f.horizon));
    }
    std::vector<double> a, p;
    for (std::size_t w = 0; w < f.windows; ++w) {
      const std::size_t from = mode == HorizonMode::cumulative ? 0 : k - 1;
      for (std::size_t s = from; s < k; ++s) {
        a.push_back(f.actual[w * f.horizon + s]);
        p.push_back(f.predicted[w * f.horizon + s]);
      }
    }
    report.horizons.push_back({k, mape(a, p), a.size() >= 2 ? r_squared(a, p) : 0.0});
  }

  std::vector<double> wa, wp, ea, ep;
  const std::size_t first = std::min(kFirstHourSteps, f.horizon);
  for (std::size_t w = 0; w < f.windows; ++w) {
    for (std::size_t s = 0; s < first; ++s) {
      const std::size_t i = w * f.horizon + s;
      const bool weekend = to_civil(f.target_times[i]).weekday >= 5;
      (weekend ? ea : wa).push_back(f.actual[i]);
      (weekend ? ep : wp).push_back(f.predicted[i]);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.weekday_mape = wa.empty() ? nan : mape(wa, wp);
  report.weekend_mape = ea.empty() ? nan : mape(ea, ep);
  return report;
}

ForecastReport multi_horizon_report(const Predictor& predictor, const WindowedDataset& data,
                                    Split split, const MinMaxScaler& scaler,
                                    std::string model_name, HorizonMode mode) {
  return summarize(collect_forecasts(predictor, data, split, scaler), std::move(model_name), mode);
}

namespace {

json report_json(const ForecastReport& r) {
  json horizons = json::array();
  for (const auto& h : r.horizons) {
    horizons.push_back({{"steps", h.steps},
                        {"hours", static_cast<double>(h.steps) / 6.0},
                        {"mape", h.mape},
                        {"r2", h.r2}});
  }
  return {{"model", r.model},
          {"mode", std::string(to_string(r.mode))},
          {"windows", r.windows},
          {"horizons", horizons},
          {"weekday_mape", nullable(r.weekday_mape)},
          {"weekend_mape", nullable(r.weekend_mape)}};
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

std::string report_to_json(const ForecastReport& report) { return report_json(report).dump(2); }

std::string report_to_text(const ForecastReport& r) {
  std::string out = r.model + " (" + std::string(to_string(r.mode)) + ", " +
                    std::to_string(r.windows) + " windows)\n";
  out += "horizon  steps   MAPE %      R2\n";
  for (const auto& h : r.horizons) {
    char line[96];
    std::snprintf(line, sizeof line, "%5.0fh  %6zu  %7.3f  %7.4f\n",
                  static_cast<double>(h.steps) / 6.0, h.steps, h.mape, h.r2);
    out += line;
  }
  out += "weekday MAPE(1h) " + fmt("%.3f", r.weekday_mape) + "  weekend MAPE(1h) " +
         fmt("%.3f", r.weekend_mape) + "\n";
  return out;
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
  json arr = json::array();
  for (const auto& row : rows) {
    arr.push_back({{"variant", std::string(to_string(row.variant))},
                   {"params", row.params},
                   {"report", report_json(row.report)}});
  }
  return json{{"ablation", arr}}.dump(2);
}

std::string ablation_to_text(const std::vector<AblationRow>& rows) {
  std::string out = "variant        params    MAPE 1h   MAPE 12h   R2 1h\n";
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%-13s %7zu  %8.3f  %9.3f  %6.4f\n",
                  std::string(to_string(row.variant)).c_str(), row.params,
                  row.report.horizons.front().mape, row.report.horizons.back().mape,
                  row.report.horizons.front().r2);
    out += line;
  }
  return out;
}

std::vector<std::size_t> missing_mask(std::size_t rows, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("missing rate must lie in [0, 1)");
  Rng rng(seed);
  std::vector<std::size_t> masked;
  for (std::size_t i = 0; i < rows; ++i) {
    const double score = rng.uniform();
    if (i > 0 && i + 1 < rows && score < rate) masked.push_back(i);
  }
  return masked;
}

RobustnessReport robustness_missing(const Predictor& predictor, const RawFrame& frame,
                                    const MinMaxScaler& scaler, const HolidayCalendar& calendar,
                                    const FeatureOptions& features, const WindowShape& shape,
                                    const RobustnessOptions& options) {
  for (const double rate : options.rates) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("missing rate must lie in [0, 1)");
  }
  if (options.steps == 0 || options.steps > shape.horizon) {
    throw ConfigError("robustness horizon must lie in 1.." + std::to_string(shape.horizon));
  }
  const auto clean_features = assemble(frame, calendar, features);
  const auto clean = single_segment_windows(clean_features, scaler, shape);
  if (clean.size(Split::test) == 0) {
    throw InsufficientDataError("robustness frame yields no complete window");
  }
  const auto picks = all_windows(clean, Split::test, options.window_stride);

  auto score = [&](const WindowedDataset& data) {
    const auto set = with_actuals(clean, Split::test, picks,
                                  predict_windows(predictor, data, Split::test, picks, scaler, 128));
    return pooled_mape(set, options.steps);
  };

  RobustnessReport report;
  report.windows = picks.size();
  report.clean_mape = score(clean);
  for (const double rate : options.rates) {
    const auto mask = missing_mask(frame.size(), rate, options.seed);
    RobustnessEntry entry{rate, mask.size(), report.clean_mape, 0.0};
    if (!mask.empty()) {
      RawFrame damaged = frame;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (const std::size_t i : mask) {
        damaged.records[i].dbt = nan;
        damaged.records[i].rh = nan;
        damaged.records[i].kw = nan;
      }
      const auto repaired = assemble(impute_linear(damaged), calendar, features);
      entry.mape = score(single_segment_windows(repaired, scaler, shape));
      entry.delta = entry.mape - report.clean_mape;
    }
    report.entries.push_back(entry);
  }
  return report;
}

std::string robustness_to_json(const RobustnessReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"rate", e.rate},
                       {"masked_rows", e.masked_rows},
                       {"mape", e.mape},
                       {"delta", e.delta}});
  }
  return json{{"clean_mape", r.clean_mape}, {"windows", r.windows}, {"entries", entries}}.dump(2);
}

LatencyReport latency_from_samples(std::vector<double> samples, std::string model_kind) {
  if (samples.empty()) throw ContractError("latency report needs at least one sample");
  std::sort(samples.begin(), samples.end());
  CompensatedSum total;
  for (const double s : samples) total.add(s);
  LatencyReport r;
  r.model_kind = std::move(model_kind);
  r.iterations = samples.size();
  r.mean_ms = total.value() / static_cast<double>(samples.size());
  r.p50_ms = nearest_rank(samples, 50.0);
  r.p95_ms = nearest_rank(samples, 95.0);
  r.p99_ms = nearest_rank(samples, 99.0);
  r.throughput = r.mean_ms > 0.0 ? 1000.0 / r.mean_ms : 0.0;
  return r;
}

LatencyReport latency_bench(const std::function<void()>& run_once, std::size_t iterations,
                            std::size_t warmup, std::string model_kind) {
  if (iterations < 100) throw ConfigError("latency bench needs at least 100 iterations");
  for (std::size_t i = 0; i < warmup; ++i) run_once();
  std::vector<double> samples;
  samples.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run_once();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  auto report = latency_from_samples(std::move(samples), std::move(model_kind));
  report.warmup = warmup;
  return report;
}

std::string latency_to_json(const LatencyReport& r) {
  return json{{"model_kind", r.model_kind},
              {"iterations", r.iterations},
              {"warmup", r.warmup},
              {"batch_mode", r.batch_mode},
              {"mean_ms", r.mean_ms},
              {"p50_ms", r.p50_ms},
              {"p95_ms", r.p95_ms},
              {"p99_ms", r.p99_ms},
              {"throughput_per_s", r.throughput}}
      .dump(2);
}

}  // namespace ladbnet
