#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <json.hpp>

#include "ladbnet/error.hpp"
#include "ladbnet/log.hpp"
#include "ladbnet/model_io.hpp"
#include "support/small.hpp"

namespace ladbnet {
namespace {

using nn::Tensor;

Tensor<float> windows(std::size_t n, const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n * c.seq_len * c.n_features);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return Tensor<float>({n, c.seq_len, c.n_features}, std::move(v));
}

bool same(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

class ModelIo : public ::testing::Test {
 protected:
  void SetUp() override {
    previous_ = set_log_sink({});
    data_ = testing::small_data(1200, 3);
    model_ = Model::build(testing::small_config(), 3);
    train(model_, data_.windows, testing::quick_train(1));
  }
  void TearDown() override { set_log_sink(previous_); }

  Artifact float_artifact() const {
    Artifact a;
    a.float_model = model_;
    a.scaler = data_.scaler.params();
    a.holidays = {parse_date("2023-01-01"), parse_date("2023-12-25")};
    a.seed = 17;
    return a;
  }

  Artifact int8_artifact() const {
    Artifact a;
    a.quantized = calibrate(fold_bn(model_), representative_windows(data_.windows, Split::train, 50));
    a.scaler = data_.scaler.params();
    return a;
  }

  LogSink previous_;
  PreparedData data_;
  Model model_ = Model::build(testing::small_config(), 0);
};

TEST(Fnv1a, PublishedVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST_F(ModelIo, FloatRoundTripIsBitwise) {
  const auto a = float_artifact();
  const auto bytes = serialize(a);
  const auto b = deserialize(bytes);
  ASSERT_TRUE(b.float_model.has_value());
  EXPECT_FALSE(b.is_quantized());
  const auto x = windows(6, model_.config(), 1);
  EXPECT_TRUE(same(a.float_model->predict(x), b.float_model->predict(x)));
  EXPECT_EQ(b.seed, 17u);
  EXPECT_EQ(b.holidays, a.holidays);
  EXPECT_EQ(b.scaler->min, a.scaler->min);
  EXPECT_EQ(b.scaler->max, a.scaler->max);
  EXPECT_EQ(serialize(b), bytes);
}

TEST_F(ModelIo, QuantizedRoundTripIsBitwise) {
  const auto a = int8_artifact();
  const auto bytes = serialize(a);
  const auto b = deserialize(bytes);
  ASSERT_TRUE(b.is_quantized());
  const auto x = windows(4, model_.config(), 2);
  EXPECT_TRUE(same(a.quantized->predict(x), b.quantized->predict(x)));
  EXPECT_EQ(serialize(b), bytes);
  EXPECT_EQ(artifact_payload_bytes(a), a.quantized->payload_bytes());
}

TEST_F(ModelIo, HeaderLayout) {
  const auto bytes = serialize(float_artifact());
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "LADB");
  std::uint32_t version = 0;
  std::uint64_t meta_len = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&meta_len, bytes.data() + 8, 8);
  EXPECT_EQ(version, kFormatVersion);
  const auto meta = nlohmann::json::parse(bytes.substr(16, meta_len));
  EXPECT_EQ(meta.at("kind"), "float32");
  EXPECT_EQ(bytes.size(), 16 + meta_len + artifact_payload_bytes(float_artifact()));
}

void expect_format_error(const std::string& bytes, const std::string& section) {
  try {
    deserialize(bytes);
    ADD_FAILURE() << "no error for " << section;
  } catch (const FormatError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(section, 0), 0u) << e.what();
  }
}

TEST_F(ModelIo, CorruptionNamesTheSection) {
  const auto bytes = serialize(float_artifact());
  std::uint64_t meta_len = 0;
  std::memcpy(&meta_len, bytes.data() + 8, 8);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_format_error(bad_magic, "header");
  auto bad_version = bytes;
  bad_version[4] = 9;
  expect_format_error(bad_version, "header");
  expect_format_error(bytes.substr(0, 10), "header");

  auto bad_json = bytes;
  bad_json[16] = '!';
  expect_format_error(bad_json, "metadata");
  expect_format_error(bytes.substr(0, 16 + meta_len / 2), "metadata");

  auto flipped = bytes;
  flipped[16 + meta_len + 3] ^= 0x01;
  expect_format_error(flipped, "payload");
  expect_format_error(bytes.substr(0, bytes.size() - 1), "payload");
}

TEST_F(ModelIo, FilesAndErrors) {
  const auto path = std::filesystem::temp_directory_path() / "ladbnet_io_test.ladb";
  save_artifact(path, float_artifact());
  const auto b = load_artifact(path);
  EXPECT_TRUE(b.float_model.has_value());
  std::filesystem::remove(path);
  EXPECT_THROW(load_artifact(path), IoError);
  EXPECT_THROW(save_artifact("/nonexistent/dir/m.ladb", float_artifact()), IoError);
  EXPECT_THROW(serialize(Artifact{}), ContractError);
}

}  // namespace
}  // namespace ladbnet
