// Runs the twelve acceptance criteria and prints one PASS/FAIL line each.
// Usage: ladbnet_acceptance [criterion numbers...]   (default: all)

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ladbnet/error.hpp"
#include "ladbnet/eval.hpp"
#include "ladbnet/log.hpp"
#include "ladbnet/metrics.hpp"
#include "ladbnet/model_io.hpp"
#include "ladbnet/pipeline.hpp"
#include "ladbnet/quant.hpp"
#include "ladbnet/trainer.hpp"
#include "support/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace ladbnet;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kGradRelErr = 1e-6;
constexpr std::size_t kGradCases = 20;
constexpr double kGradBudgetSeconds = 120.0;
constexpr std::size_t kCausalSteps = 32;
constexpr double kMetricTol = 1e-9;
constexpr std::size_t kMetricPairs = 1000;
constexpr std::size_t kRows = 90720;
constexpr std::uint64_t kSeed = 42;
constexpr double kMinRelativeGain = 0.10;
constexpr double kTrainBudgetSeconds = 15 * 60.0;
constexpr double kAblationSlackPoints = 0.2;
constexpr double kQuantSlackPoints = 0.5;
constexpr double kPayloadRatio = 0.25, kPayloadTol = 0.025;
constexpr double kLatencyBudgetMs = 150.0;
constexpr std::size_t kLatencyIterations = 1000, kLatencyWarmup = 20;
constexpr std::size_t kCalibrationWindows = 1000;
constexpr std::size_t kClaimedParams = 245000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const std::string& line) { std::cerr << "  .. " << line << std::endl; }

// Reduced-epoch schedule for the 90,720-row synthetic run.
TrainConfig learning_schedule() {
  TrainConfig t;
  t.seed = kSeed;
  t.max_epochs = 60;
  t.early_stop_patience = 10;
  t.max_batches_per_epoch = 150;
  t.validation_stride = 4;
  return t;
}

double mape_1h(const Predictor& p, const PreparedData& d, Split split) {
  return summarize(collect_forecasts(p, d.windows, split, d.scaler), "m").at(6).mape;
}

// ---------------------------------------------------------------------------
// Shared synthetic experiment, built on first use.

struct Trained {
  Model model;
  TrainHistory history;
  double seconds = 0.0;
};

struct Experiment {
  PreparedData data;
  std::optional<Trained> full, lag_only, tcn_only;
  std::optional<QuantizedModel> quantized;
};

Experiment& experiment() {
  static std::unique_ptr<Experiment> e;
  if (!e) {
    progress("generating " + std::to_string(kRows) + " synthetic rows (seed " +
             std::to_string(kSeed) + ")");
    e = std::make_unique<Experiment>(Experiment{prepare_dataset(synth_generate(kRows, kSeed), {}),
                                                {}, {}, {}, {}});
  }
  return *e;
}

Trained train_variant(Variant v) {
  const auto& d = experiment().data;
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig config;
  config.variant = v;
  Model model = Model::build(config, kSeed);
  auto history = train(model, d.windows, learning_schedule(), [&](const EpochRecord& r) {
    progress(fmt("%s epoch %zu train=%.5f val=%.5f (%.1fs)", std::string(to_string(v)).c_str(),
                 r.epoch, r.train_loss, r.val_loss, r.seconds));
  });
  return {std::move(model), std::move(history), seconds_since(t0)};
}

const Trained& trained(Variant v) {
  auto& e = experiment();
  auto& slot = v == Variant::full ? e.full : v == Variant::lag_only ? e.lag_only : e.tcn_only;
  if (!slot) slot = train_variant(v);
  return *slot;
}

const QuantizedModel& quantized_full() {
  auto& e = experiment();
  if (!e.quantized) {
    e.quantized = calibrate(fold_bn(trained(Variant::full).model),
                            representative_windows(e.data.windows, Split::train,
                                                   kCalibrationWindows));
  }
  return *e.quantized;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto checks = testing::op_checks();
  double worst = 0.0;
  std::string worst_op, failing;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Rng rng(5000 + i);
    for (std::size_t c = 0; c < kGradCases; ++c) {
      const double err = checks[i].run_case(rng);
      if (!(err < kGradRelErr) && failing.find(checks[i].name) == std::string::npos) {
        failing += std::string(failing.empty() ? "" : ",") + checks[i].name;
      }
      if (!(err <= worst)) {
        worst = err;
        worst_op = checks[i].name;
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failing.empty() && secs < kGradBudgetSeconds;
  o.detail = fmt("%zu ops x %zu shapes, worst rel-err %.2e (%s) < %.0e, %.1fs < %.0fs",
                 checks.size(), kGradCases, worst, worst_op.c_str(), kGradRelErr, secs,
                 kGradBudgetSeconds);
  if (!failing.empty()) o.detail += "; failing: " + failing;
  return o;
}

Outcome causality_suite() {
  ModelConfig c;
  c.seq_len = kCausalSteps;
  const auto model = Model::build(c, 7);
  Rng rng(7);
  std::vector<float> v(kCausalSteps * c.n_features);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  const nn::Tensor<float> base_in({1, kCausalSteps, c.n_features}, v);
  const auto base = model.tcn_sequence(base_in);
  const std::size_t channels = base.shape()[2];
  std::size_t leaks = 0, dead = 0, compared = 0;
  for (std::size_t t = 0; t < kCausalSteps; ++t) {
    auto w = v;
    for (std::size_t f = 0; f < c.n_features; ++f) w[t * c.n_features + f] += 0.5f;
    const auto out = model.tcn_sequence(nn::Tensor<float>({1, kCausalSteps, c.n_features}, w));
    for (std::size_t s = 0; s < t; ++s) {
      for (std::size_t k = 0; k < channels; ++k) {
        ++compared;
        leaks += out.data()[s * channels + k] != base.data()[s * channels + k];
      }
    }
    bool changed = false;
    for (std::size_t k = 0; k < channels; ++k) {
      changed |= out.data()[t * channels + k] != base.data()[t * channels + k];
    }
    dead += !changed;
  }
  return {leaks == 0 && dead == 0,
          fmt("%zu perturbed steps, %zu earlier outputs compared bitwise, %zu changed; "
              "perturbation visible at t in %zu/%zu cases",
              kCausalSteps, compared, leaks, kCausalSteps - dead, kCausalSteps)};
}

Outcome metric_oracle() {
  Rng rng(3);
  double worst_mape = 0.0, worst_r2 = 0.0;
  for (std::size_t trial = 0; trial < kMetricPairs; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform(2.0, 500.0));
    std::vector<double> a(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(5.0, 200.0);
      p[i] = a[i] * rng.uniform(0.6, 1.4);
    }
    double abs_pct = 0.0, mean = 0.0, res = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) abs_pct += std::fabs(a[i] - p[i]) / std::fabs(a[i]);
    for (std::size_t i = 0; i < n; ++i) mean += a[i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      res += (a[i] - p[i]) * (a[i] - p[i]);
      tot += (a[i] - mean) * (a[i] - mean);
    }
    worst_mape = std::max(worst_mape, std::fabs(mape(a, p) - 100.0 * abs_pct / static_cast<double>(n)));
    worst_r2 = std::max(worst_r2, std::fabs(r_squared(a, p) - (1.0 - res / tot)));
  }
  return {worst_mape <= kMetricTol && worst_r2 <= kMetricTol,
          fmt("%zu pairs, max |diff| mape %.1e, r2 %.1e <= %.0e", kMetricPairs, worst_mape,
              worst_r2, kMetricTol)};
}

Outcome pipeline_counts() {
  const auto raw = chrono_split(kRows);
  const auto& d = experiment().data;
  const auto& r = d.ranges;
  const bool exact = raw[Split::train].size() == 63504 && raw[Split::val].size() == 13608 &&
                     raw[Split::test].size() == 13608;
  const std::size_t valid = d.features.valid_rows();
  const bool adjusted = r[Split::train].size() + r[Split::val].size() + r[Split::test].size() ==
                        valid && valid == kRows - kMaxLag;
  return {exact && adjusted,
          fmt("%zu rows -> %zu/%zu/%zu; after dropping %zu lag rows the pipeline splits %zu "
              "feature rows -> %zu/%zu/%zu (windows %zu/%zu/%zu)",
              kRows, raw[Split::train].size(), raw[Split::val].size(), raw[Split::test].size(),
              kMaxLag, valid, r[Split::train].size(), r[Split::val].size(), r[Split::test].size(),
              d.windows.size(Split::train), d.windows.size(Split::val),
              d.windows.size(Split::test))};
}

Outcome learning_check() {
  const auto& t = trained(Variant::full);
  const auto& d = experiment().data;
  const auto model = multi_horizon_report(make_predictor(t.model), d.windows, Split::test, d.scaler,
                                          "ladbnet");
  const auto naive = summarize(seasonal_naive(d.windows, Split::test), "seasonal_naive");
  const double m = model.at(6).mape, b = naive.at(6).mape;
  const double gain = (b - m) / b;
  std::cerr << report_to_text(model) << report_to_text(naive);
  return {gain >= kMinRelativeGain && t.seconds < kTrainBudgetSeconds,
          fmt("test MAPE(1h) %.3f%% vs seasonal naive %.3f%%: %.1f%% lower (>= %.0f%%); "
              "%zu epochs (best %zu%s), training %.0fs < %.0fs",
              m, b, 100.0 * gain, 100.0 * kMinRelativeGain, t.history.epochs.size(),
              t.history.best_epoch, t.history.stopped_early ? ", early stop" : "", t.seconds,
              kTrainBudgetSeconds)};
}

Outcome ablation_direction() {
  const auto& d = experiment().data;
  const double full = mape_1h(make_predictor(trained(Variant::full).model), d, Split::test);
  const double lag = mape_1h(make_predictor(trained(Variant::lag_only).model), d, Split::test);
  const double tcn = mape_1h(make_predictor(trained(Variant::tcn_only).model), d, Split::test);
  return {full <= lag + kAblationSlackPoints && full <= tcn + kAblationSlackPoints,
          fmt("test MAPE(1h) full %.3f%%, lag_only %.3f%%, tcn_only %.3f%% (slack %.1f points)",
              full, lag, tcn, kAblationSlackPoints)};
}

Outcome quantization_fidelity() {
  const auto& d = experiment().data;
  const auto& model = trained(Variant::full).model;
  const auto& q = quantized_full();
  const double f = mape_1h(make_predictor(model), d, Split::val);
  const double i8 = mape_1h(make_predictor(q), d, Split::val);
  const double ratio =
      static_cast<double>(q.payload_bytes()) / static_cast<double>(float_payload_bytes(model));
  return {i8 - f <= kQuantSlackPoints && std::fabs(ratio - kPayloadRatio) <= kPayloadTol,
          fmt("validation MAPE(1h) float %.3f%%, int8 %.3f%% (+%.3f <= %.1f points); payload "
              "%zu / %zu bytes = %.4f (%.3f +- %.3f)",
              f, i8, i8 - f, kQuantSlackPoints, q.payload_bytes(), float_payload_bytes(model),
              ratio, kPayloadRatio, kPayloadTol)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ladbnet_acceptance_determinism";
  fs::remove_all(root);
  json cfg = json::parse(R"({
    "seed": 11,
    "model": {"lag_window": 24, "conv_filters": [16, 16], "dilated_filters": 16,
              "lag_dense": [32, 16], "fusion_dense": [32, 16]},
    "train": {"max_epochs": 3, "early_stop_patience": 3, "max_batches_per_epoch": 20,
              "validation_stride": 8},
    "eval": {"calibration_samples": 64}
  })");
  const std::vector<std::string> outputs{"data.csv", "prepare.json", "model.ladb", "train.json",
                                         "eval.json"};
  std::vector<std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / ("run" + std::to_string(pass));
    fs::create_directories(dir);
    cfg["paths"]["data"] = (dir / "data.csv").string();
    cfg["paths"]["model"] = (dir / "model.ladb").string();
    std::ofstream(dir / "config.json") << cfg.dump(2);
    const std::string cli = std::string(LADBNET_CLI) + " ";
    const std::string conf = " --config " + (dir / "config.json").string();
    const std::string log = " 2>>" + (dir / "log.txt").string();
    const std::vector<std::string> steps{
        cli + "gen-data" + conf + " --rows 4000" + log,
        cli + "prepare" + conf + " --out " + (dir / "prepare.json").string() + log,
        cli + "train" + conf + " --out " + (dir / "train.json").string() + log,
        cli + "eval" + conf + " --out " + (dir / "eval.json").string() + log};
    for (const auto& step : steps) {
      if (std::system(step.c_str()) != 0) {
        return {false, "command failed: " + step + "\n" + slurp(dir / "log.txt")};
      }
    }
    std::vector<std::string> contents;
    // Reports echo their own output paths; compare them with the run directory masked.
    for (const auto& name : outputs) {
      auto text = slurp(dir / name);
      if (name.ends_with(".json")) {
        const std::string d = dir.string();
        for (auto at = text.find(d); at != std::string::npos; at = text.find(d, at)) {
          text.replace(at, d.size(), "<run>");
        }
      }
      contents.push_back(std::move(text));
    }
    if (pass == 0) {
      first = std::move(contents);
      continue;
    }
    std::string differ, sizes;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (contents[i].empty() || contents[i] != first[i]) differ += " " + outputs[i];
    }
    const auto model_hash = fnv1a64(first[2]);
    fs::remove_all(root);
    return {differ.empty(),
            differ.empty()
                ? fmt("two CLI runs gen-data/prepare/train/eval: %zu outputs bitwise identical "
                      "(model %zu bytes, fnv1a64 %016llx)",
                      outputs.size(), first[2].size(),
                      static_cast<unsigned long long>(model_hash))
                : "outputs differ:" + differ};
  }
  return {false, "unreachable"};
}

bool rejects(const std::string& bytes, const std::string& section) {
  try {
    deserialize(bytes);
  } catch (const FormatError& e) {
    return std::string(e.what()).rfind(section, 0) == 0;
  }
  return false;
}

Outcome serialization() {
  const auto& d = experiment().data;
  Artifact fa, qa;
  fa.float_model = trained(Variant::full).model;
  fa.scaler = d.scaler.params();
  qa.quantized = quantized_full();
  qa.scaler = d.scaler.params();
  const auto x = representative_windows(d.windows, Split::test, 64);
  auto same = [](const nn::Tensor<float>& a, const nn::Tensor<float>& b) {
    return a.shape() == b.shape() &&
           std::equal(a.data().begin(), a.data().end(), b.data().begin(),
                      [](float p, float q) { return std::memcmp(&p, &q, sizeof p) == 0; });
  };
  const fs::path dir = fs::temp_directory_path();
  save_artifact(dir / "ladbnet_acceptance_f.ladb", fa);
  save_artifact(dir / "ladbnet_acceptance_q.ladb", qa);
  const auto fb = load_artifact(dir / "ladbnet_acceptance_f.ladb");
  const auto qb = load_artifact(dir / "ladbnet_acceptance_q.ladb");
  fs::remove(dir / "ladbnet_acceptance_f.ladb");
  fs::remove(dir / "ladbnet_acceptance_q.ladb");
  const bool float_ok = fb.float_model && same(fa.float_model->predict(x), fb.float_model->predict(x));
  const bool int8_ok = qb.quantized && same(qa.quantized->predict(x), qb.quantized->predict(x));

  std::size_t rejected = 0, cases = 0;
  for (const auto* a : {&fa, &qa}) {
    const auto bytes = serialize(*a);
    std::uint64_t meta_len = 0;
    std::memcpy(&meta_len, bytes.data() + 8, 8);
    auto magic = bytes, version = bytes, meta = bytes, payload = bytes;
    magic[1] ^= 0x20;
    version[5] = 1;
    meta[16 + meta_len / 2] = '\x01';
    payload[16 + meta_len + (bytes.size() - 16 - meta_len) / 2] ^= 0x40;
    const std::vector<std::pair<std::string, std::string>> corrupt{
        {magic, "header"},
        {version, "header"},
        {bytes.substr(0, 12), "header"},
        {meta, "metadata"},
        {bytes.substr(0, 16 + meta_len - 1), "metadata"},
        {payload, "payload"},
        {bytes.substr(0, bytes.size() - 4), "payload"}};
    for (const auto& [b, section] : corrupt) {
      ++cases;
      rejected += rejects(b, section);
    }
  }
  return {float_ok && int8_ok && rejected == cases,
          fmt("round trip bitwise on %zu windows: float %s, int8 %s; %zu/%zu corrupted files "
              "rejected with the right section",
              x.shape()[0], float_ok ? "yes" : "NO", int8_ok ? "yes" : "NO", rejected, cases)};
}

Outcome robustness_trend() {
  const auto& d = experiment().data;
  RobustnessOptions opt;
  opt.seed = kSeed;
  const auto r = robustness_missing(make_predictor(trained(Variant::full).model),
                                    segment_frame(d, Split::test), d.scaler, {}, {}, {}, opt);
  bool monotone = true;
  std::string deltas;
  double prev = 0.0;
  for (const auto& e : r.entries) {
    monotone &= e.delta >= prev;
    prev = e.delta;
    deltas += fmt(" %.0f%%:%+.3f", 100.0 * e.rate, e.delta);
  }
  return {monotone, fmt("clean test MAPE(1h) %.3f%% over %zu windows; deltas (points)%s",
                        r.clean_mape, r.windows, deltas.c_str())};
}

Outcome bench_sanity() {
  const auto& d = experiment().data;
  const Forecaster forecaster(quantized_full(), d.scaler);
  const auto& raw = d.raw.records;
  const std::vector<RawRecord> records(raw.end() - static_cast<std::ptrdiff_t>(forecaster.min_records()),
                                       raw.end());
  const auto r = latency_bench([&] { (void)forecaster.forecast(records); }, kLatencyIterations,
                               kLatencyWarmup, "int8");
  return {r.p50_ms <= r.p95_ms && r.p95_ms <= r.p99_ms && r.p50_ms < kLatencyBudgetMs,
          fmt("int8 end-to-end, %zu iterations: mean %.3f, P50 %.3f <= P95 %.3f <= P99 %.3f ms; "
              "P50 < %.0f ms; %.0f predictions/s",
              r.iterations, r.mean_ms, r.p50_ms, r.p95_ms, r.p99_ms, kLatencyBudgetMs,
              r.throughput)};
}

Outcome parameter_audit() {
  // Independent recount from the layer list: dense = in*out + out (+2*out with
  // batch norm), conv = k*in*out + out + 2*out.
  auto dense = [](std::size_t in, std::size_t out, bool bn) { return in * out + out + (bn ? 2 * out : 0); };
  auto conv = [](std::size_t in, std::size_t out) { return 3 * in * out + out + 2 * out; };
  const std::size_t expected = dense(24 * 27, 256, true) + dense(256, 128, true) + conv(27, 64) +
                               conv(64, 64) + conv(64, 128) + dense(384, 256, true) +
                               dense(256, 128, false) + dense(128, 72, false);
  const auto model = Model::build({}, 1);
  const std::size_t n = model.count_params();
  std::size_t running_stats = 0;
  for (const auto& t : model.layer_tensors()) {
    if (t.mean.defined()) running_stats += t.mean.size() + t.var.size();
  }
  return {n == expected,
          fmt("count_params %zu (layer arithmetic %zu); claimed ~%zu differs by %+zd (%.0f%%); "
              "running BN statistics add %zu non-trainable values",
              n, expected, kClaimedParams,
              static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(kClaimedParams),
              100.0 * (static_cast<double>(n) / kClaimedParams - 1.0), running_stats)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  set_log_sink({});
  const std::vector<Criterion> all{
      {1, "gradient suite", gradient_suite},
      {2, "causality suite", causality_suite},
      {3, "metric oracle", metric_oracle},
      {4, "pipeline counts", pipeline_counts},
      {5, "learning check", learning_check},
      {6, "ablation direction", ablation_direction},
      {7, "quantization fidelity", quantization_fidelity},
      {8, "determinism", determinism},
      {9, "serialization", serialization},
      {10, "robustness trend", robustness_trend},
      {11, "bench sanity", bench_sanity},
      {12, "parameter audit", parameter_audit},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    ++ran;
    progress(fmt("criterion %d: %s", c.id, c.name));
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const auto line = fmt("%s %2d %-22s %s  [%.1fs]", o.pass ? "PASS" : "FAIL", c.id, c.name,
                          o.detail.c_str(), seconds_since(t0));
    std::cout << line << std::endl;
    failed += !o.pass;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
