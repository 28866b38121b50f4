#include "app/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ladbnet/error.hpp"
#include "ladbnet/log.hpp"

namespace ladbnet::app {

using nlohmann::json;

namespace {

HttpReply error_reply(int status, const std::string& kind, const std::string& message,
                      json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  return {status, extra.dump()};
}

// Field values: numbers, or null for a missing reading.
double reading(const json& record, const char* key, std::size_t index) {
  const auto it = record.find(key);
  if (it == record.end()) {
    throw SchemaError("record " + std::to_string(index) + " lacks '" + key + "'");
  }
  if (it->is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!it->is_number()) {
    throw SchemaError("record " + std::to_string(index) + " field '" + key + "' is not a number");
  }
  return it->get<double>();
}

}  // namespace

double round_significant(double value, int digits) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

PredictionService::PredictionService(Forecaster forecaster, std::string model_info_json,
                                     std::size_t metrics_window)
    : forecaster_(std::move(forecaster)),
      model_info_(std::move(model_info_json)),
      window_(std::max<std::size_t>(metrics_window, 1)) {}

HttpReply PredictionService::health() const { return {200, json{{"status", "ok"}}.dump()}; }

HttpReply PredictionService::metrics() const {
  std::vector<double> samples;
  {
    std::lock_guard lock(mutex_);
    samples.assign(latencies_.begin(), latencies_.end());
  }
  const std::string kind = forecaster_.quantized() ? "int8" : "float32";
  if (samples.empty()) {
    return {200, json{{"model_kind", kind}, {"iterations", 0}}.dump()};
  }
  return {200, json::parse(latency_to_json(latency_from_samples(std::move(samples), kind))).dump()};
}

void PredictionService::record_latency(double ms) {
  std::lock_guard lock(mutex_);
  latencies_.push_back(ms);
  while (latencies_.size() > window_) latencies_.pop_front();
}

HttpReply PredictionService::predict(const std::string& body) {
  const auto t0 = std::chrono::steady_clock::now();
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply(400, "malformed_json", e.what());
  }

  std::vector<RawRecord> records;
  try {
    if (!request.is_object() || !request.contains("records") || !request["records"].is_array()) {
      throw SchemaError("body must be an object with a 'records' array");
    }
    const auto& arr = request["records"];
    records.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& r = arr[i];
      if (!r.is_object() || !r.contains("datetime") || !r["datetime"].is_string()) {
        throw SchemaError("record " + std::to_string(i) + " needs a 'datetime' string");
      }
      RawRecord rec;
      try {
        rec.time = parse_timestamp(r["datetime"].get<std::string>());
      } catch (const Error& e) {
        throw SchemaError("record " + std::to_string(i) + ": " + e.what());
      }
      rec.dbt = reading(r, "DBT", i);
      rec.rh = reading(r, "RH", i);
      rec.kw = reading(r, "kW", i);
      records.push_back(rec);
    }
  } catch (const Error& e) {
    return error_reply(400, e.kind(), e.what());
  }

  const std::size_t need = forecaster_.min_records();
  if (records.size() < need) {
    return error_reply(422, "insufficient_data",
                       "at least " + std::to_string(need) + " records are required (" +
                           std::to_string(kMaxLag) + " lag rows + " +
                           std::to_string(forecaster_.config().seq_len) + " window rows)",
                       {{"required_records", need}, {"received_records", records.size()}});
  }

  try {
    const auto result = forecaster_.forecast(records);
    json forecast = json::array(), minutes = json::array();
    for (std::size_t h = 0; h < result.kw.size(); ++h) {
      forecast.push_back(round_significant(result.kw[h]));
      minutes.push_back((h + 1) * (kStepSeconds / 60));
    }
    const json reply{{"forecast_kw", forecast},
                     {"horizon_minutes", minutes},
                     {"first_target", format_timestamp(result.first_target)},
                     {"model", json::parse(model_info_)}};
    record_latency(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    return {200, reply.dump()};
  } catch (const ContractError& e) {
    return error_reply(422, e.kind(), e.what());
  } catch (const InsufficientDataError& e) {
    return error_reply(422, e.kind(), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

void PredictionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  server.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  server.Get("/v1/metrics", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, metrics());
  });
  server.Post("/v1/predict", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, predict(req.body));
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "unknown failure";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", "internal"}, {"message", message}}.dump(),
                        "application/json");
      });
}

void serve(PredictionService& service, const std::string& host, int port, std::size_t threads) {
  httplib::Server server;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  service.mount(server);
  log_info("serving on http://" + host + ":" + std::to_string(port));
  if (!server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace ladbnet::app
