#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ladbnet/dataset.hpp"
#include "ladbnet/eval.hpp"
#include "ladbnet/features.hpp"
#include "ladbnet/model.hpp"
#include "ladbnet/trainer.hpp"

namespace ladbnet::app {

struct PathsConfig {
  std::string data = "data/synthetic.csv";
  std::string model = "model.ladb";
  std::string calendar;  // empty: no holidays
  std::string out;       // empty: stdout
};

struct GeneratorConfig {
  std::size_t rows = 90720;
  SynthProfile profile;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 4;
  std::size_t metrics_window = 1024;
};

struct EvalConfig {
  HorizonMode horizon_mode = HorizonMode::cumulative;
  std::vector<double> robustness_rates{0.05, 0.10, 0.20};
  std::size_t robustness_stride = 1;
  std::size_t bench_iterations = 1000;
  std::size_t bench_warmup = 20;
  std::size_t calibration_samples = 1000;
};

/// Everything a command needs. Loaded from one JSON file; every key is
/// optional and unknown keys are rejected.
struct AppConfig {
  std::uint64_t seed = 42;
  PathsConfig paths;
  ModelConfig model;
  TrainConfig train;
  GeneratorConfig generator;
  FeatureOptions features;
  SplitRatios split;
  ServiceConfig service;
  EvalConfig eval;

  void validate() const;
};

AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const AppConfig& config);

}  // namespace ladbnet::app
