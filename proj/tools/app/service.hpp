#pragma once

#include <cstddef>
#include <deque>
#include <mutex>
#include <string>

#include "ladbnet/eval.hpp"
#include "ladbnet/pipeline.hpp"

namespace httplib {
class Server;
}

namespace ladbnet::app {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

/// Request handling for the prediction API, independent of the transport.
/// The forecaster is shared read-only; only the latency window is guarded.
class PredictionService {
 public:
  PredictionService(Forecaster forecaster, std::string model_info_json,
                    std::size_t metrics_window = 1024);

  HttpReply health() const;
  HttpReply metrics() const;
  HttpReply predict(const std::string& body);

  /// Registers the three endpoints on `server`.
  void mount(httplib::Server& server);

 private:
  void record_latency(double ms);

  Forecaster forecaster_;
  std::string model_info_;
  std::size_t window_;
  mutable std::mutex mutex_;
  std::deque<double> latencies_;
};

/// 6 significant digits, as a JSON number.
double round_significant(double value, int digits = 6);

/// Blocks serving HTTP until the server is stopped.
void serve(PredictionService& service, const std::string& host, int port, std::size_t threads);

}  // namespace ladbnet::app
