#include "ladbnet/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <numeric>

#include "ladbnet/error.hpp"

namespace ladbnet {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2 (batch norm)");
  if (max_epochs == 0) throw ConfigError("train.max_epochs must be >= 1");
  if (early_stop_patience == 0 || early_stop_patience > max_epochs)
    throw ConfigError("train.early_stop_patience must lie in [1, max_epochs]");
  if (!(adam_beta1 > 0 && adam_beta1 < 1) || !(adam_beta2 > 0 && adam_beta2 < 1))
    throw ConfigError("train.adam_beta1/adam_beta2 must lie in (0, 1)");
  if (!(adam_epsilon > 0)) throw ConfigError("train.adam_epsilon must be > 0");
  if (validation_stride == 0) throw ConfigError("train.validation_stride must be >= 1");
}

AdamState::AdamState(const std::vector<NamedTensor>& params) {
  for (const auto& p : params) {
    m_.emplace_back(p.tensor.size(), 0.0f);
    v_.emplace_back(p.tensor.size(), 0.0f);
  }
}

void AdamState::apply(std::vector<NamedTensor>& params, const TrainConfig& config) {
  if (params.size() != m_.size()) throw ContractError("adam: parameter list changed size");
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (const float g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }
  ++step_;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params[i].tensor;
    if (!t.has_grad()) continue;
    auto values = t.data();
    const auto grads = t.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grads[j];
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / c1;
      const double v_hat = vj / c2;
      values[j] -= static_cast<float>(config.learning_rate * m_hat /
                                      (std::sqrt(v_hat) + config.adam_epsilon));
    }
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

double evaluate_loss(const Model& model, const WindowedDataset& data, Split split,
                     std::size_t stride) {
  const std::size_t n = data.size(split);
  if (n == 0) throw ConfigError(std::string(to_string(split)) + " split has no windows");
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < n; i += std::max<std::size_t>(stride, 1)) picks.push_back(i);

  const auto& shape = data.shape();
  const std::size_t chunk = 128;
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < picks.size(); i += chunk) {
    const std::size_t b = std::min(chunk, picks.size() - i);
    std::vector<float> inputs(b * shape.input_steps * kInputCount), targets(b * shape.horizon);
    data.gather(split, std::span(picks).subspan(i, b), inputs, targets);
    const auto pred =
        model.predict(nn::Tensor<float>({b, shape.input_steps, kInputCount}, std::move(inputs)));
    const auto p = pred.data();
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const double d = static_cast<double>(p[j]) - targets[j];
      sse += d * d;
    }
    count += targets.size();
  }
  return sse / static_cast<double>(count);
}

TrainHistory train(Model& model, const WindowedDataset& data, const TrainConfig& config,
                   const ProgressFn& progress) {
  config.validate();
  if (data.size(Split::train) == 0) throw ConfigError("training split has no windows");
  if (data.size(Split::val) == 0) throw ConfigError("validation split has no windows");
  const auto& shape = data.shape();
  if (shape.input_steps != model.config().seq_len || shape.horizon != model.config().horizon) {
    throw ConfigError("dataset window shape does not match the model configuration");
  }

  Rng order_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  auto params = model.parameters();
  AdamState adam(params);
  TrainHistory history;
  Model best = model.clone();
  double best_loss = std::numeric_limits<double>::infinity();

  const std::size_t n_train = data.size(Split::train);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) order_rng.shuffle(order.begin(), order.end());
    auto batches = make_batches(std::move(order), config.batch_size);
    if (config.max_batches_per_epoch > 0 && batches.size() > config.max_batches_per_epoch) {
      batches.resize(config.max_batches_per_epoch);
    }

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : batches) {
      const std::size_t b = batch.size();
      std::vector<float> inputs(b * shape.input_steps * kInputCount), targets(b * shape.horizon);
      data.gather(Split::train, batch, inputs, targets);
      nn::Graph<float> graph;
      const auto x = nn::Tensor<float>({b, shape.input_steps, kInputCount}, std::move(inputs));
      const auto y = nn::Tensor<float>({b, shape.horizon}, std::move(targets));
      const auto pred = model.forward_train(x, graph, dropout_rng);
      const auto loss = nn::mse_loss(pred, y, &graph);
      graph.backward(loss);
      adam.apply(params, config);
      for (auto& p : params) p.tensor.zero_grad();
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(b);
      seen += b;
    }

    const double val_loss = evaluate_loss(model, data, Split::val, config.validation_stride);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const EpochRecord record{epoch, loss_sum / static_cast<double>(seen), val_loss, seconds};
    history.epochs.push_back(record);
    if (progress) progress(record);

    if (val_loss < best_loss) {
      best_loss = val_loss;
      history.best_epoch = epoch;
      best.assign_values(model);
    } else if (epoch - history.best_epoch >= config.early_stop_patience) {
      history.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  history.best_val_loss = best_loss;
  model.assign_values(best);
  return history;
}

std::string history_to_json(const TrainHistory& history) {
  nlohmann::json j;
  j["best_epoch"] = history.best_epoch;
  j["best_val_loss"] = history.best_val_loss;
  j["stopped_early"] = history.stopped_early;
  auto& epochs = j["epochs"] = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"seconds", e.seconds}});
  }
  return j.dump(2);
}

}  // namespace ladbnet
