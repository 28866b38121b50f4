#include <benchmark/benchmark.h>

#include "ladbnet/features.hpp"
#include "ladbnet/dataset.hpp"
#include "ladbnet/model.hpp"
#include "ladbnet/ops.hpp"
#include "ladbnet/quant.hpp"
#include "ladbnet/rng.hpp"

namespace {

using namespace ladbnet;

nn::Tensor<float> random_batch(std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(batch * 144 * kInputCount);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return nn::Tensor<float>({batch, 144, kInputCount}, std::move(v));
}

void BM_FloatForward(benchmark::State& state) {
  const auto model = Model::build(ModelConfig{}, 1);
  const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FloatForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  auto model = Model::build(ModelConfig{}, 1);
  const auto batch = random_batch(16, 2);
  const auto target = nn::Tensor<float>::zeros({16, 72});
  auto params = model.parameters();
  Rng rng(3);
  for (auto _ : state) {
    nn::Graph<float> graph;
    const auto loss = nn::mse_loss(model.forward_train(batch, graph, rng), target, &graph);
    graph.backward(loss);
    for (auto& p : params) p.tensor.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_QuantizedForward(benchmark::State& state) {
  const auto model = Model::build(ModelConfig{}, 1);
  const auto q = calibrate(fold_bn(model), random_batch(32, 4));
  const auto batch = random_batch(1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(q.predict(batch));
}
BENCHMARK(BM_QuantizedForward)->Unit(benchmark::kMillisecond);

void BM_CausalConv(benchmark::State& state) {
  Rng rng(5);
  auto fill = [&](nn::Shape s) {
    std::vector<float> v(nn::numel(s));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
    return nn::Tensor<float>(s, std::move(v));
  };
  const auto x = fill({16, 144, 64});
  const auto w = fill({3, 64, 128});
  const auto b = fill({128});
  for (auto _ : state) benchmark::DoNotOptimize(nn::causal_conv1d(x, w, b, 2));
}
BENCHMARK(BM_CausalConv)->Unit(benchmark::kMillisecond);

void BM_FeatureAssembly(benchmark::State& state) {
  const auto frame = synth_generate(static_cast<std::size_t>(state.range(0)), 7);
  const HolidayCalendar calendar;
  for (auto _ : state) benchmark::DoNotOptimize(assemble(frame, calendar));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureAssembly)->Arg(288)->Arg(8640)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
