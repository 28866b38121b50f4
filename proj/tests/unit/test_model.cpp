#include <gtest/gtest.h>

#include "ladbnet/error.hpp"
#include "ladbnet/model.hpp"
#include "support/gradcheck.hpp"

namespace ladbnet {
namespace {

using nn::Tensor;

Tensor<float> random_batch(std::size_t b, const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(b * c.seq_len * c.n_features);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return Tensor<float>({b, c.seq_len, c.n_features}, std::move(v));
}

// Dense layer: weights, bias, optional gamma/beta.
std::size_t dense(std::size_t in, std::size_t out, bool bn) { return in * out + out + (bn ? 2 * out : 0); }
std::size_t conv(std::size_t k, std::size_t in, std::size_t out) { return k * in * out + out + 2 * out; }

TEST(Model, ParameterCountOfDefaultArchitecture) {
  const std::size_t lag = dense(24 * 27, 256, true) + dense(256, 128, true);
  const std::size_t tcn = conv(3, 27, 64) + conv(3, 64, 64) + conv(3, 64, 128);
  const std::size_t fusion = dense(128 + 2 * 128, 256, true) + dense(256, 128, false) +
                             dense(128, 72, false);
  const auto model = Model::build({}, 1);
  EXPECT_EQ(model.count_params(), lag + tcn + fusion);
  EXPECT_EQ(model.count_params(), 383880u);
}

TEST(Model, EveryVariantMapsBatchToHorizon) {
  for (const auto v : all_variants()) {
    ModelConfig c;
    c.variant = v;
    const auto model = Model::build(c, 3);
    const auto y = model.predict(random_batch(3, c, 4));
    EXPECT_EQ(y.shape(), (nn::Shape{3, 72})) << to_string(v);
    for (const float x : y.data()) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Model, VariantNamesRoundTrip) {
  for (const auto v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("both"), ConfigError);
}

TEST(Model, WrongInputShapeIsDimensionError) {
  const auto model = Model::build({}, 1);
  EXPECT_THROW(model.predict(Tensor<float>::zeros({2, 100, 27})), DimensionError);
  EXPECT_THROW(model.predict(Tensor<float>::zeros({2, 144, 26})), DimensionError);
}

TEST(Model, InvalidConfigIsRejected) {
  ModelConfig c;
  c.lag_window = 200;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Model, SameSeedBuildsIdenticalWeights) {
  const auto a = Model::build({}, 42);
  const auto b = Model::build({}, 42);
  const auto c = Model::build({}, 43);
  const auto sa = a.state(), sb = b.state(), sc = c.state();
  bool any_differs = false;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_TRUE(std::equal(sa[i].tensor.data().begin(), sa[i].tensor.data().end(),
                           sb[i].tensor.data().begin()));
    any_differs |= !std::equal(sa[i].tensor.data().begin(), sa[i].tensor.data().end(),
                               sc[i].tensor.data().begin());
  }
  EXPECT_TRUE(any_differs);
}

TEST(Model, LagOnlyIgnoresStepsBeforeTheLagWindow) {
  ModelConfig c;
  c.variant = Variant::lag_only;
  const auto model = Model::build(c, 5);
  auto x = random_batch(2, c, 6);
  const auto before = model.predict(x);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t t = 0; t < c.seq_len - c.lag_window; ++t) {
      for (std::size_t f = 0; f < c.n_features; ++f) {
        x.data()[(b * c.seq_len + t) * c.n_features + f] += 10.0f;
      }
    }
  }
  const auto after = model.predict(x);
  EXPECT_TRUE(std::equal(before.data().begin(), before.data().end(), after.data().begin()));
}

TEST(Model, TcnSequenceIsCausal) {
  ModelConfig c;
  c.seq_len = 32;
  const auto model = Model::build(c, 8);
  const auto x = random_batch(1, c, 9);
  const auto base = model.tcn_sequence(x);
  const std::size_t ch = base.dim(2);
  for (std::size_t t = 0; t < c.seq_len; t += 7) {
    auto probe = x.clone();
    for (std::size_t f = 0; f < c.n_features; ++f) probe.data()[t * c.n_features + f] += 1.0f;
    const auto out = model.tcn_sequence(probe);
    for (std::size_t s = 0; s < t * ch; ++s) ASSERT_EQ(out.data()[s], base.data()[s]) << t;
  }
  ModelConfig lag = c;
  lag.variant = Variant::lag_only;
  EXPECT_THROW(Model::build(lag, 1).tcn_sequence(x), StructuralError);
}

TEST(Model, CloneIsIndependentAndAssignCopiesValues) {
  const auto a = Model::build({}, 1);
  auto b = a.clone();
  auto pb = b.parameters();
  pb[0].tensor.data()[0] += 1.0f;
  EXPECT_NE(a.parameters()[0].tensor.data()[0], pb[0].tensor.data()[0]);
  b.assign_values(a);
  EXPECT_EQ(a.parameters()[0].tensor.data()[0], b.parameters()[0].tensor.data()[0]);

  ModelConfig other;
  other.variant = Variant::tcn_only;
  auto c = Model::build(other, 1);
  EXPECT_THROW(c.assign_values(a), StructuralError);
}

TEST(Model, TrainForwardRecordsAGraphAndUpdatesRunningStats) {
  auto model = Model::build({}, 2);
  const auto x = random_batch(4, model.config(), 3);
  const auto mean_before = model.buffers()[0].tensor.clone();
  nn::Graph<float> g;
  Rng rng(1);
  const auto y = model.forward_train(x, g, rng);
  EXPECT_EQ(y.shape(), (nn::Shape{4, 72}));
  EXPECT_GT(g.size(), 0u);
  const auto mean_after = model.buffers()[0].tensor;
  EXPECT_FALSE(std::equal(mean_before.data().begin(), mean_before.data().end(),
                          mean_after.data().begin()));
}

TEST(Model, FromTensorsRejectsMissingBatchNorm) {
  const auto a = Model::build({}, 1);
  auto tensors = a.layer_tensors();
  tensors[0].gamma = {};
  EXPECT_THROW(Model::from_tensors(a.config(), tensors, false), StructuralError);
}

}  // namespace
}  // namespace ladbnet
