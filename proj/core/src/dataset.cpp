#include "ladbnet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ladbnet/error.hpp"
#include "ladbnet/log.hpp"

namespace ladbnet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxMaterializedRows = 20'000'000;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view text, double& out) {
  if (text.empty() || text == "NaN" || text == "nan" || text == "NA") {
    out = kNaN;
    return true;
  }
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

RawFrame parse_csv(std::string_view text, std::string_view source) {
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const auto nl = text.find('\n', pos);
    line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    return true;
  };
  auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };

  std::string_view header;
  if (!next_line(header)) throw SchemaError(std::string(source) + ": empty file (no header)");
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto names = split_fields(header);
  int idx_time = -1, idx_dbt = -1, idx_rh = -1, idx_kw = -1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "datetime") idx_time = static_cast<int>(i);
    else if (names[i] == "DBT") idx_dbt = static_cast<int>(i);
    else if (names[i] == "RH") idx_rh = static_cast<int>(i);
    else if (names[i] == "kW") idx_kw = static_cast<int>(i);
  }
  for (const auto& [idx, name] : {std::pair{idx_time, "datetime"}, std::pair{idx_dbt, "DBT"},
                                  std::pair{idx_rh, "RH"}, std::pair{idx_kw, "kW"}}) {
    if (idx < 0) {
      throw SchemaError(std::string(source) + ": header lacks required column '" + name +
                        "' (expected datetime,DBT,RH,kW)");
    }
  }

  std::vector<RawRecord> rows;
  std::string_view line;
  while (next_line(line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != names.size()) {
      throw ParseError(where() + "expected " + std::to_string(names.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    RawRecord r;
    try {
      r.time = parse_timestamp(fields[static_cast<std::size_t>(idx_time)]);
    } catch (const ParseError& e) {
      throw ParseError(where() + e.what());
    }
    if (!parse_number(fields[static_cast<std::size_t>(idx_dbt)], r.dbt) ||
        !parse_number(fields[static_cast<std::size_t>(idx_rh)], r.rh) ||
        !parse_number(fields[static_cast<std::size_t>(idx_kw)], r.kw)) {
      throw ParseError(where() + "malformed numeric field");
    }
    rows.push_back(r);
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.time < b.time; });
  RawFrame frame;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      const std::int64_t gap = rows[i].time.seconds - rows[i - 1].time.seconds;
      if (gap == 0) {
        throw ParseError(std::string(source) + ": duplicate timestamp " +
                         format_timestamp(rows[i].time));
      }
      if (gap % kStepSeconds != 0) {
        throw ParseError(std::string(source) + ": timestamp " + format_timestamp(rows[i].time) +
                         " is off the 10-minute grid");
      }
      const auto missing = static_cast<std::size_t>(gap / kStepSeconds - 1);
      if (frame.size() + missing > kMaxMaterializedRows) {
        throw ParseError(std::string(source) + ": gap before " + format_timestamp(rows[i].time) +
                         " is implausibly large");
      }
      for (std::size_t k = 1; k <= missing; ++k) {
        frame.records.push_back(RawRecord{
            Timestamp{rows[i - 1].time.seconds + static_cast<std::int64_t>(k) * kStepSeconds},
            kNaN, kNaN, kNaN});
      }
    }
    frame.records.push_back(rows[i]);
  }
  return frame;
}

RawFrame load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::string format_csv(const RawFrame& frame) {
  std::string out = "datetime,DBT,RH,kW\n";
  char buf[128];
  auto num = [&](double v) -> std::string {
    if (std::isnan(v)) return "";
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  };
  for (const auto& r : frame.records) {
    out += format_timestamp(r.time);
    out += ',' + num(r.dbt) + ',' + num(r.rh) + ',' + num(r.kw) + '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const RawFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_csv(frame);
}

RawFrame impute_linear(const RawFrame& frame) {
  RawFrame out = frame;
  const std::size_t n = out.size();
  auto fill = [&](double RawRecord::*field, const char* name) {
    std::size_t i = 0;
    while (i < n) {
      if (!std::isnan(out[i].*field)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < n && std::isnan(out[j].*field)) ++j;
      if (i == 0 || j == n) {
        throw InsufficientDataError(std::string("cannot interpolate ") + name + ": " +
                                    (i == 0 ? "leading" : "trailing") + " gap starting at " +
                                    format_timestamp(out[i].time));
      }
      const double a = out[i - 1].*field;
      const double b = out[j].*field;
      const auto steps = static_cast<double>(j - i + 1);
      for (std::size_t k = i; k < j; ++k) {
        out[k].*field = a + (b - a) * static_cast<double>(k - i + 1) / steps;
      }
      i = j;
    }
  };
  fill(&RawRecord::kw, "kW");
  fill(&RawRecord::dbt, "DBT");
  fill(&RawRecord::rh, "RH");
  return out;
}

MinMaxScaler::MinMaxScaler(ScalerParams params) : params_(std::move(params)), fitted_(true) {
  if (params_.columns.size() != kFeatureCount || params_.min.size() != kFeatureCount ||
      params_.max.size() != kFeatureCount) {
    throw FormatError("scaler record must hold " + std::to_string(kFeatureCount) + " columns");
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (params_.columns[c] != kFeatureColumns[c]) {
      throw FormatError("scaler column " + std::to_string(c) + " is '" + params_.columns[c] +
                        "', expected '" + std::string(kFeatureColumns[c]) + "'");
    }
    if (!(params_.max[c] >= params_.min[c])) {
      throw FormatError("scaler column '" + params_.columns[c] + "' has max < min");
    }
  }
}

void MinMaxScaler::fit(const FeatureMatrix& features, std::size_t begin, std::size_t end) {
  if (begin >= end || end > features.rows) {
    throw InsufficientDataError("scaler fit needs a non-empty row range inside the table");
  }
  ScalerParams p;
  p.min.assign(kFeatureCount, std::numeric_limits<double>::infinity());
  p.max.assign(kFeatureCount, -std::numeric_limits<double>::infinity());
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const double v = features.at(r, c);
      if (std::isnan(v)) {
        throw ContractError("scaler fit range includes undefined feature values at row " +
                            std::to_string(r));
      }
      p.min[c] = std::min(p.min[c], v);
      p.max[c] = std::max(p.max[c], v);
    }
  }
  for (auto name : kFeatureColumns) p.columns.emplace_back(name);
  params_ = std::move(p);
  fitted_ = true;
}

const ScalerParams& MinMaxScaler::params() const {
  require_fitted();
  return params_;
}

void MinMaxScaler::require_fitted() const {
  if (!fitted_) throw StateError("scaler used before fit");
}

double MinMaxScaler::apply(std::size_t col, double value) const {
  require_fitted();
  const double range = params_.max[col] - params_.min[col];
  if (range == 0.0) return 0.0;
  return (value - params_.min[col]) / range;
}

double MinMaxScaler::invert(std::size_t col, double value) const {
  require_fitted();
  return params_.min[col] + value * (params_.max[col] - params_.min[col]);
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

SplitRanges chrono_split(std::size_t rows, const SplitRatios& ratios, std::size_t min_segment,
                         std::size_t offset) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }
  // The epsilon keeps exact products such as 0.7 * 90720 from flooring down.
  const auto n_train = static_cast<std::size_t>(std::floor(rows * ratios.train + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(rows * ratios.val + 1e-9));
  SplitRanges s;
  s.ranges[0] = {offset, offset + n_train};
  s.ranges[1] = {offset + n_train, offset + n_train + n_val};
  s.ranges[2] = {offset + n_train + n_val, offset + rows};
  for (Split sp : {Split::train, Split::val, Split::test}) {
    if (s[sp].size() < min_segment) {
      throw InsufficientDataError(std::string(to_string(sp)) + " segment has " +
                                  std::to_string(s[sp].size()) + " rows, need at least " +
                                  std::to_string(min_segment));
    }
  }
  return s;
}

WindowedDataset make_windows(const FeatureMatrix& features, const MinMaxScaler& scaler,
                             const SplitRanges& split, const WindowShape& shape) {
  if (!scaler.fitted()) throw StateError("make_windows needs a fitted scaler");
  WindowedDataset ds;
  ds.shape_ = shape;
  const std::size_t rows = features.rows;
  ds.inputs_.resize(rows * kInputCount);
  ds.targets_.resize(rows);
  ds.kw_.resize(rows);
  ds.times_ = features.timestamps;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < kInputCount; ++c) {
      ds.inputs_[r * kInputCount + c] = static_cast<float>(scaler.apply(c, features.at(r, c)));
    }
    ds.targets_[r] = static_cast<float>(scaler.apply(kTargetColumn, features.at(r, kTargetColumn)));
    ds.kw_[r] = features.at(r, kTargetColumn);
  }
  for (Split sp : {Split::train, Split::val, Split::test}) {
    const auto& seg = split[sp];
    if (seg.end > rows || seg.begin < features.valid_from) {
      throw ContractError(std::string(to_string(sp)) +
                          " segment lies outside the valid feature rows");
    }
    ds.segments_[static_cast<int>(sp)] = seg;
    if (seg.size() < shape.span()) {
      if (seg.size() > 0) {
        log_warning(std::string(to_string(sp)) + " segment of " + std::to_string(seg.size()) +
                    " rows is shorter than one window (" + std::to_string(shape.span()) +
                    "); skipped");
      }
      ds.counts_[static_cast<int>(sp)] = 0;
    } else {
      ds.counts_[static_cast<int>(sp)] = seg.size() - shape.span() + 1;
    }
  }
  return ds;
}

std::size_t WindowedDataset::size(Split split) const { return counts_[static_cast<int>(split)]; }

std::size_t WindowedDataset::start(Split split, std::size_t i) const {
  if (i >= size(split)) {
    throw DimensionError("window " + std::to_string(i) + " out of range for " +
                         std::string(to_string(split)) + " (" + std::to_string(size(split)) + ")");
  }
  return segments_[static_cast<int>(split)].begin + i;
}

std::span<const float> WindowedDataset::input(Split split, std::size_t i) const {
  return {inputs_.data() + start(split, i) * kInputCount, shape_.input_steps * kInputCount};
}

std::span<const float> WindowedDataset::target(Split split, std::size_t i) const {
  return {targets_.data() + start(split, i) + shape_.input_steps, shape_.horizon};
}

std::span<const double> WindowedDataset::actual_kw(Split split, std::size_t i) const {
  return {kw_.data() + start(split, i) + shape_.input_steps, shape_.horizon};
}

std::span<const double> WindowedDataset::kw_history(Split split, std::size_t i) const {
  return {kw_.data() + start(split, i), shape_.span()};
}

Timestamp WindowedDataset::target_time(Split split, std::size_t i, std::size_t step) const {
  return times_[start(split, i) + shape_.input_steps + step];
}

void WindowedDataset::gather(Split split, std::span<const std::size_t> windows,
                             std::span<float> inputs, std::span<float> targets) const {
  const std::size_t in_len = shape_.input_steps * kInputCount;
  if (inputs.size() < windows.size() * in_len || targets.size() < windows.size() * shape_.horizon) {
    throw DimensionError("gather: output buffers too small");
  }
  for (std::size_t j = 0; j < windows.size(); ++j) {
    const auto in = input(split, windows[j]);
    std::copy(in.begin(), in.end(), inputs.begin() + static_cast<std::ptrdiff_t>(j * in_len));
    const auto tg = target(split, windows[j]);
    std::copy(tg.begin(), tg.end(),
              targets.begin() + static_cast<std::ptrdiff_t>(j * shape_.horizon));
  }
}

}  // namespace ladbnet
