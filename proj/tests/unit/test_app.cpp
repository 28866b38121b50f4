#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "app/service.hpp"
#include "ladbnet/error.hpp"
#include "ladbnet/log.hpp"
#include "ladbnet/model_io.hpp"

namespace ladbnet::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Full-length windows with narrow layers.
ModelConfig narrow_model() {
  ModelConfig c;
  c.lag_window = 24;
  c.conv_filters = {8, 8};
  c.dilated_filters = 8;
  c.lag_dense = {16, 8};
  c.fusion_dense = {16, 8};
  return c;
}

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    previous_ = set_log_sink({});
    dir_ = fs::temp_directory_path() /
           ("ladbnet_app_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    fs::remove_all(dir_);
    set_log_sink(previous_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  LogSink previous_;
  fs::path dir_;
};

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.model.seq_len, 144u);
  EXPECT_EQ(c.model.horizon, 72u);
  EXPECT_EQ(c.train.batch_size, 16u);
  EXPECT_EQ(c.train.max_epochs, 400u);
  EXPECT_EQ(c.train.early_stop_patience, 50u);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.0005);
  EXPECT_EQ(c.generator.rows, 90720u);
  const auto d = parse_config(R"({"seed": 7, "train": {"batch_size": 32}, "model": {"variant": "lag_only"}})");
  EXPECT_EQ(d.seed, 7u);
  EXPECT_EQ(d.train.seed, 7u);
  EXPECT_EQ(d.train.batch_size, 32u);
  EXPECT_EQ(d.model.variant, Variant::lag_only);
  const auto again = parse_config(config_to_json(d));
  EXPECT_EQ(config_to_json(again), config_to_json(d));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config(R"({"sed": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"lr": 0.1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"batch_size": "big"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"batch_size": -4}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"split": {"train": 0.5, "val": 0.1, "test": 0.1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"eval": {"horizon_mode": "sometimes"}})"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/c.json"), IoError);
}

TEST_F(Scratch, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"gen-data", "--bogus", "1"}), 2);
  EXPECT_EQ(run({"gen-data", "--rows", "many"}), 2);
}

TEST_F(Scratch, RuntimeErrorsExitOne) {
  std::ofstream(path("bad.json")) << R"({"unknown": true})";
  EXPECT_EQ(run({"gen-data", "--config", path("bad.json"), "--out", path("d.csv")}), 1);
  EXPECT_EQ(run({"eval", "--model", path("missing.ladb"), "--data", path("missing.csv")}), 1);
}

TEST_F(Scratch, GenDataWritesHeaderAndRows) {
  ASSERT_EQ(run({"gen-data", "--rows", "1000", "--seed", "7", "--out", path("d.csv")}), 0);
  const auto text = slurp(path("d.csv"));
  std::size_t lines = 0;
  for (const char ch : text) lines += ch == '\n';
  EXPECT_EQ(lines, 1001u);
  EXPECT_EQ(text.rfind("datetime,DBT,RH,kW\n", 0), 0u);
  EXPECT_EQ(load_csv(path("d.csv")).size(), 1000u);
  ASSERT_EQ(run({"gen-data", "--rows", "1000", "--seed", "7", "--out", path("e.csv")}), 0);
  EXPECT_EQ(slurp(path("e.csv")), text);
}

TEST_F(Scratch, EnvironmentConfigFallback) {
  std::ofstream(path("c.json")) << R"({"generator": {"rows": 300}})";
  ::setenv("LADBNET_CONFIG", path("c.json").c_str(), 1);
  const int code = run({"gen-data", "--out", path("d.csv")});
  ::unsetenv("LADBNET_CONFIG");
  ASSERT_EQ(code, 0);
  EXPECT_EQ(load_csv(path("d.csv")).size(), 300u);
}

TEST_F(Scratch, TrainTwiceIsIdenticalAndEvalReportsFiveHorizons) {
  AppConfig c;
  c.model = narrow_model();
  c.train.max_epochs = 2;
  c.train.early_stop_patience = 2;
  c.train.max_batches_per_epoch = 6;
  c.train.validation_stride = 16;
  c.eval.calibration_samples = 32;
  auto cfg = json::parse(config_to_json(c));
  cfg["paths"]["data"] = path("d.csv");
  std::ofstream(path("c.json")) << cfg.dump();

  ASSERT_EQ(run({"gen-data", "--rows", "3000", "--seed", "3", "--out", path("d.csv")}), 0);
  const std::vector<std::string> train{"train", "--config", path("c.json"), "--seed", "5"};
  auto with = [](std::vector<std::string> v, std::vector<std::string> more) {
    v.insert(v.end(), more.begin(), more.end());
    return v;
  };
  ASSERT_EQ(run(with(train, {"--model", path("a.ladb"), "--out", path("a.json")})), 0);
  ASSERT_EQ(run(with(train, {"--model", path("b.ladb"), "--out", path("b.json")})), 0);
  EXPECT_EQ(slurp(path("a.ladb")), slurp(path("b.ladb")));
  EXPECT_TRUE(fs::exists(path("a.ladb.history.json")));

  ASSERT_EQ(run({"eval", "--config", path("c.json"), "--model", path("a.ladb"), "--out",
                 path("eval.json")}),
            0);
  const auto report = json::parse(slurp(path("eval.json")));
  const auto& horizons = report.at("model").at("horizons");
  ASSERT_EQ(horizons.size(), 5u);
  const std::vector<double> hours{1, 2, 4, 8, 12};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(horizons[i].at("hours").get<double>(), hours[i]);
  EXPECT_TRUE(report.contains("seasonal_naive"));

  ASSERT_EQ(run({"quantize", "--config", path("c.json"), "--model", path("a.ladb"), "--out",
                 path("q.ladb")}),
            0);
  EXPECT_TRUE(load_artifact(path("q.ladb")).is_quantized());
}

class Service : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto previous = set_log_sink({});
    frame_ = new RawFrame(synth_generate(3000, 21));
    const auto data = prepare_dataset(*frame_, {});
    service_ = new PredictionService(
        Forecaster(Model::build(narrow_model(), 2), data.scaler), R"({"kind":"float32"})");
    set_log_sink(previous);
  }
  static void TearDownTestSuite() {
    delete service_;
    delete frame_;
  }

  static std::string body(std::size_t count) {
    json records = json::array();
    for (std::size_t i = frame_->size() - count; i < frame_->size(); ++i) {
      const auto& r = (*frame_)[i];
      records.push_back(
          {{"datetime", format_timestamp(r.time)}, {"DBT", r.dbt}, {"RH", r.rh}, {"kW", r.kw}});
    }
    return json{{"records", records}}.dump();
  }

  static RawFrame* frame_;
  static PredictionService* service_;
};
RawFrame* Service::frame_ = nullptr;
PredictionService* Service::service_ = nullptr;

TEST_F(Service, Health) {
  const auto r = service_->health();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(json::parse(r.body), (json{{"status", "ok"}}));
}

TEST_F(Service, ShortHistoryNamesTheMinimum) {
  const auto r = service_->predict(body(287));
  EXPECT_EQ(r.status, 422);
  const auto j = json::parse(r.body);
  EXPECT_EQ(j.at("required_records"), 288);
  EXPECT_EQ(j.at("received_records"), 287);
  EXPECT_NE(j.at("message").get<std::string>().find("288"), std::string::npos);
}

TEST_F(Service, MalformedBodiesAreBadRequests) {
  EXPECT_EQ(service_->predict("{not json").status, 400);
  EXPECT_EQ(service_->predict(R"({"rows": []})").status, 400);
  EXPECT_EQ(service_->predict(R"({"records": [{"DBT": 1}]})").status, 400);
}

TEST_F(Service, IdenticalRequestsGiveIdenticalForecasts) {
  const auto a = service_->predict(body(288));
  ASSERT_EQ(a.status, 200) << a.body;
  const auto b = service_->predict(body(288));
  const auto ja = json::parse(a.body), jb = json::parse(b.body);
  EXPECT_EQ(ja.at("forecast_kw"), jb.at("forecast_kw"));
  ASSERT_EQ(ja.at("forecast_kw").size(), 72u);
  EXPECT_EQ(ja.at("horizon_minutes").front(), 10);
  EXPECT_EQ(ja.at("horizon_minutes").back(), 720);
  EXPECT_EQ(ja.at("model").at("kind"), "float32");
  const auto m = json::parse(service_->metrics().body);
  EXPECT_GE(m.at("iterations").get<int>(), 2);
}

TEST_F(Service, ConcurrentRequestsAgree) {
  const auto expected = json::parse(service_->predict(body(300)).body).at("forecast_kw");
  std::vector<std::thread> threads;
  std::vector<json> got(4);
  for (std::size_t t = 0; t < got.size(); ++t) {
    threads.emplace_back([&, t] { got[t] = json::parse(service_->predict(body(300)).body); });
  }
  for (auto& th : threads) th.join();
  for (const auto& g : got) EXPECT_EQ(g.at("forecast_kw"), expected);
}

TEST_F(Service, HttpRoundTrip) {
  httplib::Server server;
  service_->mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  const auto short_history = client.Post("/v1/predict", body(287), "application/json");
  ASSERT_TRUE(short_history);
  EXPECT_EQ(short_history->status, 422);
  const auto ok = client.Post("/v1/predict", body(288), "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body).at("forecast_kw"),
            json::parse(service_->predict(body(288)).body).at("forecast_kw"));
  const auto bad = client.Post("/v1/predict", "]", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  server.stop();
  listener.join();
}

TEST(RoundSignificant, SixDigits) {
  EXPECT_EQ(round_significant(123.4567891), 123.457);
  EXPECT_EQ(round_significant(0.000123456789), 0.000123457);
  EXPECT_EQ(round_significant(0.0), 0.0);
}

}  // namespace
}  // namespace ladbnet::app
