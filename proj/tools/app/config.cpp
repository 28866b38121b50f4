#include "app/config.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <type_traits>

#include "ladbnet/error.hpp"

namespace ladbnet::app {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in '" + section + "'");
  }
}

template <typename T>
void read(const json& obj, const std::string& section, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string where = section.empty() ? key : section + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(where + " must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ConfigError(where + " must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (it->is_number_integer() && !it->is_number_unsigned() && it->get<std::int64_t>() < 0) {
        throw ConfigError(where + " must be non-negative");
      }
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) throw ConfigError(where + " must be a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(where + " must be a string");
  }
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + " has the wrong type");
  }
}

void read_range(const json& obj, const std::string& section, const char* key, HourRange& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw ConfigError(section + "." + key + " must be a [start, end] pair of hours");
  }
  out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  if (out.start < 0 || out.start >= 24 || out.end < 0 || out.end > 24) {
    throw ConfigError(section + "." + key + " hours must lie in [0, 24]");
  }
}

void parse_model(const json& j, ModelConfig& m) {
  check_keys(j, "model",
             {"seq_len", "n_features", "lag_window", "horizon", "conv_filters", "dilated_filters",
              "kernel_size", "dilation", "lag_dense", "fusion_dense", "dropout", "variant",
              "bn_momentum", "bn_epsilon"});
  read(j, "model", "seq_len", m.seq_len);
  read(j, "model", "n_features", m.n_features);
  read(j, "model", "lag_window", m.lag_window);
  read(j, "model", "horizon", m.horizon);
  read(j, "model", "conv_filters", m.conv_filters);
  read(j, "model", "dilated_filters", m.dilated_filters);
  read(j, "model", "kernel_size", m.kernel_size);
  read(j, "model", "dilation", m.dilation);
  read(j, "model", "lag_dense", m.lag_dense);
  read(j, "model", "fusion_dense", m.fusion_dense);
  read(j, "model", "dropout", m.dropout);
  std::string variant(to_string(m.variant));
  read(j, "model", "variant", variant);
  m.variant = parse_variant(variant);
  read(j, "model", "bn_momentum", m.batch_norm.momentum);
  read(j, "model", "bn_epsilon", m.batch_norm.epsilon);
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j, "train",
             {"learning_rate", "batch_size", "max_epochs", "early_stop_patience", "adam_beta1",
              "adam_beta2", "adam_epsilon", "shuffle", "max_batches_per_epoch",
              "validation_stride"});
  read(j, "train", "learning_rate", t.learning_rate);
  read(j, "train", "batch_size", t.batch_size);
  read(j, "train", "max_epochs", t.max_epochs);
  read(j, "train", "early_stop_patience", t.early_stop_patience);
  read(j, "train", "adam_beta1", t.adam_beta1);
  read(j, "train", "adam_beta2", t.adam_beta2);
  read(j, "train", "adam_epsilon", t.adam_epsilon);
  read(j, "train", "shuffle", t.shuffle);
  read(j, "train", "max_batches_per_epoch", t.max_batches_per_epoch);
  read(j, "train", "validation_stride", t.validation_stride);
}

void parse_generator(const json& j, GeneratorConfig& g) {
  check_keys(j, "generator",
             {"rows", "start", "base_kw", "business_uplift_kw", "daily_amplitude_kw",
              "weekly_amplitude_kw", "weekend_factor", "temp_coupling_kw_per_c",
              "ar_coefficient", "ar_noise_kw", "noise_kw", "clamp_floor_kw", "dbt_mean",
              "dbt_daily_amplitude", "dbt_annual_amplitude", "dbt_min", "dbt_max", "rh_mean",
              "rh_min", "rh_max"});
  auto& p = g.profile;
  read(j, "generator", "rows", g.rows);
  read(j, "generator", "start", p.start);
  read(j, "generator", "base_kw", p.base_kw);
  read(j, "generator", "business_uplift_kw", p.business_uplift_kw);
  read(j, "generator", "daily_amplitude_kw", p.daily_amplitude_kw);
  read(j, "generator", "weekly_amplitude_kw", p.weekly_amplitude_kw);
  read(j, "generator", "weekend_factor", p.weekend_factor);
  read(j, "generator", "temp_coupling_kw_per_c", p.temp_coupling_kw_per_c);
  read(j, "generator", "ar_coefficient", p.ar_coefficient);
  read(j, "generator", "ar_noise_kw", p.ar_noise_kw);
  read(j, "generator", "noise_kw", p.noise_kw);
  read(j, "generator", "clamp_floor_kw", p.clamp_floor_kw);
  read(j, "generator", "dbt_mean", p.dbt_mean);
  read(j, "generator", "dbt_daily_amplitude", p.dbt_daily_amplitude);
  read(j, "generator", "dbt_annual_amplitude", p.dbt_annual_amplitude);
  read(j, "generator", "dbt_min", p.dbt_min);
  read(j, "generator", "dbt_max", p.dbt_max);
  read(j, "generator", "rh_mean", p.rh_mean);
  read(j, "generator", "rh_min", p.rh_min);
  read(j, "generator", "rh_max", p.rh_max);
}

void parse_features(const json& j, FeatureOptions& f) {
  check_keys(j, "features",
             {"night", "business_hours", "morning_peak", "evening_peak", "population_std"});
  read_range(j, "features", "night", f.night);
  read_range(j, "features", "business_hours", f.business_hours);
  read_range(j, "features", "morning_peak", f.morning_peak);
  read_range(j, "features", "evening_peak", f.evening_peak);
  read(j, "features", "population_std", f.population_std);
}

void parse_eval(const json& j, EvalConfig& e) {
  check_keys(j, "eval",
             {"horizon_mode", "robustness_rates", "robustness_stride", "bench_iterations",
              "bench_warmup", "calibration_samples"});
  std::string mode(to_string(e.horizon_mode));
  read(j, "eval", "horizon_mode", mode);
  if (mode == "cumulative") {
    e.horizon_mode = HorizonMode::cumulative;
  } else if (mode == "per_step") {
    e.horizon_mode = HorizonMode::per_step;
  } else {
    throw ConfigError("eval.horizon_mode must be 'cumulative' or 'per_step'");
  }
  read(j, "eval", "robustness_rates", e.robustness_rates);
  read(j, "eval", "robustness_stride", e.robustness_stride);
  read(j, "eval", "bench_iterations", e.bench_iterations);
  read(j, "eval", "bench_warmup", e.bench_warmup);
  read(j, "eval", "calibration_samples", e.calibration_samples);
}

json range_json(const HourRange& r) { return json::array({r.start, r.end}); }

}  // namespace

void AppConfig::validate() const {
  model.validate();
  train.validate();
  if (model.n_features != kInputCount) {
    throw ConfigError("model.n_features must equal the " + std::to_string(kInputCount) +
                      " engineered input columns");
  }
  const double total = split.train + split.val + split.test;
  if (split.train <= 0 || split.val <= 0 || split.test <= 0 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }
  if (service.port < 0 || service.port > 65535) throw ConfigError("service.port out of range");
  if (service.threads == 0) throw ConfigError("service.threads must be >= 1");
  for (const double r : eval.robustness_rates) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("eval.robustness_rates must lie in [0, 1)");
  }
  if (eval.bench_iterations < 100) throw ConfigError("eval.bench_iterations must be >= 100");
  if (eval.calibration_samples == 0) throw ConfigError("eval.calibration_samples must be >= 1");
  if (eval.robustness_stride == 0) throw ConfigError("eval.robustness_stride must be >= 1");
}

AppConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  AppConfig c;
  check_keys(j, "<root>",
             {"seed", "paths", "model", "train", "generator", "features", "split", "service",
              "eval"});
  read(j, "", "seed", c.seed);
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_keys(p, "paths", {"data", "model", "calendar", "out"});
    read(p, "paths", "data", c.paths.data);
    read(p, "paths", "model", c.paths.model);
    read(p, "paths", "calendar", c.paths.calendar);
    read(p, "paths", "out", c.paths.out);
  }
  if (j.contains("model")) parse_model(j["model"], c.model);
  if (j.contains("train")) parse_train(j["train"], c.train);
  if (j.contains("generator")) parse_generator(j["generator"], c.generator);
  if (j.contains("features")) parse_features(j["features"], c.features);
  if (j.contains("split")) {
    const auto& s = j["split"];
    check_keys(s, "split", {"train", "val", "test"});
    read(s, "split", "train", c.split.train);
    read(s, "split", "val", c.split.val);
    read(s, "split", "test", c.split.test);
  }
  if (j.contains("service")) {
    const auto& s = j["service"];
    check_keys(s, "service", {"host", "port", "threads", "metrics_window"});
    read(s, "service", "host", c.service.host);
    read(s, "service", "port", c.service.port);
    read(s, "service", "threads", c.service.threads);
    read(s, "service", "metrics_window", c.service.metrics_window);
  }
  if (j.contains("eval")) parse_eval(j["eval"], c.eval);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const AppConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& p = c.generator.profile;
  json j;
  j["seed"] = c.seed;
  j["paths"] = {{"data", c.paths.data},
                {"model", c.paths.model},
                {"calendar", c.paths.calendar},
                {"out", c.paths.out}};
  j["model"] = {{"seq_len", m.seq_len},
                {"n_features", m.n_features},
                {"lag_window", m.lag_window},
                {"horizon", m.horizon},
                {"conv_filters", m.conv_filters},
                {"dilated_filters", m.dilated_filters},
                {"kernel_size", m.kernel_size},
                {"dilation", m.dilation},
                {"lag_dense", m.lag_dense},
                {"fusion_dense", m.fusion_dense},
                {"dropout", m.dropout},
                {"variant", std::string(to_string(m.variant))},
                {"bn_momentum", m.batch_norm.momentum},
                {"bn_epsilon", m.batch_norm.epsilon}};
  j["train"] = {{"learning_rate", t.learning_rate},
                {"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs},
                {"early_stop_patience", t.early_stop_patience},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_epsilon", t.adam_epsilon},
                {"shuffle", t.shuffle},
                {"max_batches_per_epoch", t.max_batches_per_epoch},
                {"validation_stride", t.validation_stride}};
  j["generator"] = {{"rows", c.generator.rows},
                    {"start", p.start},
                    {"base_kw", p.base_kw},
                    {"business_uplift_kw", p.business_uplift_kw},
                    {"daily_amplitude_kw", p.daily_amplitude_kw},
                    {"weekly_amplitude_kw", p.weekly_amplitude_kw},
                    {"weekend_factor", p.weekend_factor},
                    {"temp_coupling_kw_per_c", p.temp_coupling_kw_per_c},
                    {"ar_coefficient", p.ar_coefficient},
                    {"ar_noise_kw", p.ar_noise_kw},
                    {"noise_kw", p.noise_kw},
                    {"clamp_floor_kw", p.clamp_floor_kw},
                    {"dbt_mean", p.dbt_mean},
                    {"dbt_daily_amplitude", p.dbt_daily_amplitude},
                    {"dbt_annual_amplitude", p.dbt_annual_amplitude},
                    {"dbt_min", p.dbt_min},
                    {"dbt_max", p.dbt_max},
                    {"rh_mean", p.rh_mean},
                    {"rh_min", p.rh_min},
                    {"rh_max", p.rh_max}};
  j["features"] = {{"night", range_json(c.features.night)},
                   {"business_hours", range_json(c.features.business_hours)},
                   {"morning_peak", range_json(c.features.morning_peak)},
                   {"evening_peak", range_json(c.features.evening_peak)},
                   {"population_std", c.features.population_std}};
  j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
  j["service"] = {{"host", c.service.host},
                  {"port", c.service.port},
                  {"threads", c.service.threads},
                  {"metrics_window", c.service.metrics_window}};
  j["eval"] = {{"horizon_mode", std::string(to_string(c.eval.horizon_mode))},
               {"robustness_rates", c.eval.robustness_rates},
               {"robustness_stride", c.eval.robustness_stride},
               {"bench_iterations", c.eval.bench_iterations},
               {"bench_warmup", c.eval.bench_warmup},
               {"calibration_samples", c.eval.calibration_samples}};
  return j.dump(2);
}

}  // namespace ladbnet::app
