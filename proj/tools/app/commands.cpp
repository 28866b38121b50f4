#include "app/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "app/config.hpp"
#include "app/service.hpp"
#include "ladbnet/error.hpp"
#include "ladbnet/eval.hpp"
#include "ladbnet/log.hpp"
#include "ladbnet/model_io.hpp"
#include "ladbnet/pipeline.hpp"
#include "ladbnet/quant.hpp"
#include "ladbnet/trainer.hpp"

namespace ladbnet::app {

using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string model;
  std::string out;
  std::optional<std::size_t> rows;
  std::optional<int> port;
  std::optional<std::size_t> iterations;
  std::string variant;
  bool quantized = false;
};

AppConfig resolve_config(const Flags& f) {
  AppConfig c;
  std::string path = f.config;
  if (path.empty()) {
    if (const char* env = std::getenv("LADBNET_CONFIG"); env && *env) path = env;
  }
  if (!path.empty()) c = load_config(path);
  if (f.seed) c.seed = *f.seed;
  c.train.seed = c.seed;
  if (!f.data.empty()) c.paths.data = f.data;
  if (!f.model.empty()) c.paths.model = f.model;
  if (!f.out.empty()) c.paths.out = f.out;
  if (f.rows) c.generator.rows = *f.rows;
  if (f.port) c.service.port = *f.port;
  if (f.iterations) c.eval.bench_iterations = *f.iterations;
  if (!f.variant.empty()) c.model.variant = parse_variant(f.variant);
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

// Reports go to --out when given, otherwise to stdout.
void emit(const AppConfig& c, const std::string& text) {
  if (c.paths.out.empty()) {
    std::cout << text << '\n';
  } else {
    write_file(c.paths.out, text + "\n");
    log_info("wrote " + c.paths.out);
  }
}

HolidayCalendar calendar_of(const AppConfig& c) {
  return c.paths.calendar.empty() ? HolidayCalendar{} : HolidayCalendar::load(c.paths.calendar);
}

WindowShape shape_of(const ModelConfig& m) { return {m.seq_len, m.horizon}; }

PreparedData prepare(const AppConfig& c, const ModelConfig& model, const HolidayCalendar& cal,
                     const FeatureOptions& features, const ScalerParams* scaler = nullptr) {
  return prepare_dataset(load_csv(c.paths.data), cal, features, c.split, shape_of(model), scaler);
}

Artifact load_model(const AppConfig& c) {
  Artifact a = load_artifact(c.paths.model);
  if (!a.scaler) throw FormatError("metadata: model file carries no scaler record");
  return a;
}

HolidayCalendar calendar_of(const Artifact& a) {
  return HolidayCalendar(std::set<std::int64_t>(a.holidays.begin(), a.holidays.end()));
}

QuantizedModel quantize_model(const Model& model, const PreparedData& data, std::size_t samples) {
  const Model folded = model.folded() ? model : fold_bn(model);
  return calibrate(folded, representative_windows(data.windows, Split::train, samples));
}

std::string model_info(const Artifact& a, bool quantized) {
  const auto& cfg = a.config();
  const std::size_t params = a.float_model ? a.float_model->count_params() : 0;
  json info{{"kind", quantized ? "int8" : "float32"},
            {"variant", std::string(to_string(cfg.variant))},
            {"horizon", cfg.horizon},
            {"seed", a.seed}};
  if (params > 0) info["params"] = params;
  return info.dump();
}

// Forecaster over the artifact; --quantized converts a float artifact using
// calibration windows from the configured data file.
Forecaster forecaster_of(const Artifact& a, const AppConfig& c, bool quantized) {
  MinMaxScaler scaler(*a.scaler);
  if (a.quantized) return Forecaster(*a.quantized, scaler, calendar_of(a), a.features);
  if (quantized) {
    const auto data = prepare(c, a.config(), calendar_of(a), a.features, &*a.scaler);
    return Forecaster(quantize_model(*a.float_model, data, c.eval.calibration_samples), scaler,
                      calendar_of(a), a.features);
  }
  return Forecaster(*a.float_model, scaler, calendar_of(a), a.features);
}

std::vector<RawRecord> recent_records(const AppConfig& c, std::size_t count) {
  auto frame = load_csv(c.paths.data);
  if (frame.size() < count) {
    throw InsufficientDataError("'" + c.paths.data + "' holds " + std::to_string(frame.size()) +
                                " rows; " + std::to_string(count) + " are required");
  }
  std::vector<RawRecord> tail(frame.records.end() - static_cast<std::ptrdiff_t>(count),
                              frame.records.end());
  return tail;
}

json parse(const std::string& text) { return json::parse(text); }

// ---------------------------------------------------------------------------

void cmd_gen_data(const AppConfig& c) {
  const std::string path = c.paths.out.empty() ? c.paths.data : c.paths.out;
  const auto frame = synth_generate(c.generator.rows, c.seed, c.generator.profile);
  write_csv(path, frame);
  log_info("wrote " + std::to_string(frame.size()) + " rows to " + path);
}

void cmd_prepare(const AppConfig& c) {
  const auto d = prepare(c, c.model, calendar_of(c), c.features);
  const auto raw_split = chrono_split(d.raw.size(), c.split, shape_of(c.model).span());
  auto counts = [](const SplitRanges& r) {
    return json{{"train", r[Split::train].size()},
                {"val", r[Split::val].size()},
                {"test", r[Split::test].size()}};
  };
  const json report{
      {"raw_rows", d.raw.size()},
      {"imputed_rows", d.imputed_rows},
      {"valid_from", d.features.valid_from},
      {"feature_rows", d.features.valid_rows()},
      {"split_raw_rows", counts(raw_split)},
      {"split_feature_rows", counts(d.ranges)},
      {"windows",
       {{"train", d.windows.size(Split::train)},
        {"val", d.windows.size(Split::val)},
        {"test", d.windows.size(Split::test)}}},
      {"columns", kFeatureColumns},
      {"scaler", {{"min", d.scaler.params().min}, {"max", d.scaler.params().max}}}};
  emit(c, report.dump(2));
}

Artifact make_artifact(const AppConfig& c, const Model& model, const PreparedData& d,
                       const HolidayCalendar& cal) {
  Artifact a;
  a.float_model = model;
  a.scaler = d.scaler.params();
  a.features = c.features;
  a.holidays.assign(cal.days().begin(), cal.days().end());
  a.seed = c.seed;
  return a;
}

TrainHistory fit(const AppConfig& c, Model& model, const PreparedData& d) {
  return train(model, d.windows, c.train, [&](const EpochRecord& e) {
    char line[160];
    std::snprintf(line, sizeof line, "%s epoch %zu train_loss=%.6g val_loss=%.6g (%.1fs)",
                  std::string(to_string(model.config().variant)).c_str(), e.epoch, e.train_loss,
                  e.val_loss, e.seconds);
    log_info(line);
  });
}

void cmd_train(const AppConfig& c) {
  const auto cal = calendar_of(c);
  const auto d = prepare(c, c.model, cal, c.features);
  Model model = Model::build(c.model, c.seed);
  log_info("training " + std::string(to_string(c.model.variant)) + " (" +
           std::to_string(model.count_params()) + " parameters) on " +
           std::to_string(d.windows.size(Split::train)) + " windows");
  const auto history = fit(c, model, d);
  save_artifact(c.paths.model, make_artifact(c, model, d, cal));
  write_file(c.paths.model + ".history.json", history_to_json(history) + "\n");
  const json summary{{"model", c.paths.model},
                     {"params", model.count_params()},
                     {"epochs", history.epochs.size()},
                     {"best_epoch", history.best_epoch},
                     {"best_val_loss", history.best_val_loss},
                     {"stopped_early", history.stopped_early}};
  emit(c, summary.dump(2));
}

void cmd_eval(const AppConfig& c, bool quantized) {
  const auto a = load_model(c);
  const auto d = prepare(c, a.config(), calendar_of(a), a.features, &*a.scaler);
  Predictor predictor;
  std::string name;
  if (a.quantized || quantized) {
    predictor = make_predictor(a.quantized ? *a.quantized
                                           : quantize_model(*a.float_model, d,
                                                            c.eval.calibration_samples));
    name = "ladbnet-int8";
  } else {
    predictor = make_predictor(*a.float_model);
    name = "ladbnet";
  }
  name += "/" + std::string(to_string(a.config().variant));
  const auto report = multi_horizon_report(predictor, d.windows, Split::test, d.scaler, name,
                                           c.eval.horizon_mode);
  const auto baseline = summarize(seasonal_naive(d.windows, Split::test), "seasonal_naive",
                                  c.eval.horizon_mode);
  const double m = report.horizons.front().mape, b = baseline.horizons.front().mape;
  const json out{{"split", "test"},
                 {"model", parse(report_to_json(report))},
                 {"seasonal_naive", parse(report_to_json(baseline))},
                 {"mape_1h_relative_improvement", (b - m) / b}};
  std::cerr << report_to_text(report) << report_to_text(baseline);
  emit(c, out.dump(2));
}

void cmd_ablate(const AppConfig& c) {
  const auto cal = calendar_of(c);
  const auto d = prepare(c, c.model, cal, c.features);
  std::vector<AblationRow> rows;
  for (const Variant v : all_variants()) {
    ModelConfig mc = c.model;
    mc.variant = v;
    Model model = Model::build(mc, c.seed);
    fit(c, model, d);
    rows.push_back({v, model.count_params(),
                    multi_horizon_report(make_predictor(model), d.windows, Split::test, d.scaler,
                                         std::string(to_string(v)), c.eval.horizon_mode)});
  }
  std::cerr << ablation_to_text(rows);
  emit(c, ablation_to_json(rows));
}

void cmd_quantize(const AppConfig& c, const std::string& out_flag) {
  const auto a = load_model(c);
  if (a.quantized) throw ContractError("model is already quantized");
  const auto d = prepare(c, a.config(), calendar_of(a), a.features, &*a.scaler);
  const auto q = quantize_model(*a.float_model, d, c.eval.calibration_samples);

  Artifact qa = a;
  qa.float_model.reset();
  qa.quantized = q;
  const std::string path = out_flag.empty() ? c.paths.model + ".int8" : out_flag;
  save_artifact(path, qa);

  const auto rf = multi_horizon_report(make_predictor(*a.float_model), d.windows, Split::val,
                                       d.scaler, "float32", c.eval.horizon_mode);
  const auto rq = multi_horizon_report(make_predictor(q), d.windows, Split::val, d.scaler, "int8",
                                       c.eval.horizon_mode);
  const std::size_t fbytes = artifact_payload_bytes(a), qbytes = artifact_payload_bytes(qa);
  const json report{{"model", path},
                    {"float_payload_bytes", fbytes},
                    {"int8_payload_bytes", qbytes},
                    {"size_ratio", static_cast<double>(qbytes) / static_cast<double>(fbytes)},
                    {"val_mape_1h_float", rf.horizons.front().mape},
                    {"val_mape_1h_int8", rq.horizons.front().mape},
                    {"val_mape_1h_delta", rq.horizons.front().mape - rf.horizons.front().mape},
                    {"calibration_samples",
                     std::min(c.eval.calibration_samples, d.windows.size(Split::train))}};
  std::cout << report.dump(2) << '\n';
}

void cmd_bench(const AppConfig& c, bool quantized) {
  const auto a = load_model(c);
  const auto forecaster = forecaster_of(a, c, quantized);
  const auto records = recent_records(c, forecaster.min_records());
  const auto report = latency_bench([&] { (void)forecaster.forecast(records); },
                                    c.eval.bench_iterations, c.eval.bench_warmup,
                                    forecaster.quantized() ? "int8" : "float32");
  emit(c, latency_to_json(report));
}

void cmd_predict(const AppConfig& c, bool quantized) {
  const auto a = load_model(c);
  const auto forecaster = forecaster_of(a, c, quantized);
  const auto result = forecaster.forecast(recent_records(c, forecaster.min_records()));
  json kw = json::array(), minutes = json::array();
  for (std::size_t h = 0; h < result.kw.size(); ++h) {
    kw.push_back(round_significant(result.kw[h]));
    minutes.push_back((h + 1) * (kStepSeconds / 60));
  }
  emit(c, json{{"first_target", format_timestamp(result.first_target)},
               {"forecast_kw", kw},
               {"horizon_minutes", minutes},
               {"model", parse(model_info(a, forecaster.quantized()))}}
              .dump(2));
}

void cmd_robustness(const AppConfig& c, bool quantized) {
  const auto a = load_model(c);
  const auto cal = calendar_of(a);
  const auto d = prepare(c, a.config(), cal, a.features, &*a.scaler);
  const Predictor predictor =
      a.quantized ? make_predictor(*a.quantized)
      : quantized ? make_predictor(quantize_model(*a.float_model, d, c.eval.calibration_samples))
                  : make_predictor(*a.float_model);
  RobustnessOptions opts;
  opts.rates = c.eval.robustness_rates;
  opts.seed = c.seed;
  opts.window_stride = c.eval.robustness_stride;
  const auto report = robustness_missing(predictor, segment_frame(d, Split::test), d.scaler, cal,
                                         a.features, shape_of(a.config()), opts);
  emit(c, robustness_to_json(report));
}

void cmd_serve(const AppConfig& c, bool quantized) {
  const auto a = load_model(c);
  auto forecaster = forecaster_of(a, c, quantized);
  const bool q = forecaster.quantized();
  PredictionService service(std::move(forecaster), model_info(a, q), c.service.metrics_window);
  serve(service, c.service.host, c.service.port, c.service.threads);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"ladbnet: dual-branch building load forecasting"};
  app.name("ladbnet");
  app.require_subcommand(1);
  Flags f;

  auto add = [&](CLI::App* sub, std::string_view which) {
    sub->add_option("--config", f.config, "JSON config file (default: $LADBNET_CONFIG)");
    for (const char flag : which) {
      switch (flag) {
        case 's': sub->add_option("--seed", f.seed, "random seed"); break;
        case 'd': sub->add_option("--data", f.data, "input CSV"); break;
        case 'm': sub->add_option("--model", f.model, "model file"); break;
        case 'o': sub->add_option("--out", f.out, "output file"); break;
        case 'r': sub->add_option("--rows", f.rows, "rows to generate"); break;
        case 'p': sub->add_option("--port", f.port, "listen port"); break;
        case 'i': sub->add_option("--iterations", f.iterations, "timed iterations"); break;
        case 'v':
          sub->add_option("--variant", f.variant,
                          "full | lag_only | tcn_only | no_dilated | no_dual_pool");
          break;
        case 'q': sub->add_flag("--quantized", f.quantized, "use the int8 model"); break;
      }
    }
    return sub;
  };

  auto* gen = add(app.add_subcommand("gen-data", "write a synthetic building-load CSV"), "sro");
  auto* prep = add(app.add_subcommand("prepare", "report imputation, feature and split counts"), "do");
  auto* trn = add(app.add_subcommand("train", "train a model and save it"), "sdmov");
  auto* evl = add(app.add_subcommand("eval", "multi-horizon test report vs seasonal naive"), "dmoq");
  auto* abl = add(app.add_subcommand("ablate", "train and compare the five variants"), "sdo");
  auto* qnt = add(app.add_subcommand("quantize", "post-training int8 quantization"), "dmo");
  auto* bch = add(app.add_subcommand("bench", "end-to-end single-window latency"), "dmoiq");
  auto* prd = add(app.add_subcommand("predict", "forecast from the last records of a CSV"), "dmoq");
  auto* rob = add(app.add_subcommand("robustness", "missing-data degradation on the test split"), "sdmoq");
  auto* srv = add(app.add_subcommand("serve", "HTTP prediction service"), "dmpq");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const AppConfig c = resolve_config(f);
    if (gen->parsed()) cmd_gen_data(c);
    else if (prep->parsed()) cmd_prepare(c);
    else if (trn->parsed()) cmd_train(c);
    else if (evl->parsed()) cmd_eval(c, f.quantized);
    else if (abl->parsed()) cmd_ablate(c);
    else if (qnt->parsed()) cmd_quantize(c, f.out);
    else if (bch->parsed()) cmd_bench(c, f.quantized);
    else if (prd->parsed()) cmd_predict(c, f.quantized);
    else if (rob->parsed()) cmd_robustness(c, f.quantized);
    else if (srv->parsed()) cmd_serve(c, f.quantized);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ladbnet::app
