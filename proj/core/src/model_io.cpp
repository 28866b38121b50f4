#include "ladbnet/model_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ladbnet/error.hpp"

namespace ladbnet {

static_assert(std::endian::native == std::endian::little,
              "model files store raw little-endian payloads");

using nlohmann::json;
using nn::Shape;
using nn::Tensor;

namespace {

constexpr char kMagic[4] = {'L', 'A', 'D', 'B'};
constexpr std::size_t kHeaderBytes = 16;

[[noreturn]] void fail(std::string_view section, const std::string& message) {
  throw FormatError(std::string(section) + ": " + message);
}

json config_json(const ModelConfig& c) {
  return {{"seq_len", c.seq_len},
          {"n_features", c.n_features},
          {"lag_window", c.lag_window},
          {"horizon", c.horizon},
          {"conv_filters", c.conv_filters},
          {"dilated_filters", c.dilated_filters},
          {"kernel_size", c.kernel_size},
          {"dilation", c.dilation},
          {"lag_dense", c.lag_dense},
          {"fusion_dense", c.fusion_dense},
          {"dropout", c.dropout},
          {"variant", std::string(to_string(c.variant))},
          {"bn_momentum", c.batch_norm.momentum},
          {"bn_epsilon", c.batch_norm.epsilon}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.seq_len = j.at("seq_len").get<std::size_t>();
  c.n_features = j.at("n_features").get<std::size_t>();
  c.lag_window = j.at("lag_window").get<std::size_t>();
  c.horizon = j.at("horizon").get<std::size_t>();
  c.conv_filters = j.at("conv_filters").get<std::vector<std::size_t>>();
  c.dilated_filters = j.at("dilated_filters").get<std::size_t>();
  c.kernel_size = j.at("kernel_size").get<std::size_t>();
  c.dilation = j.at("dilation").get<std::size_t>();
  c.lag_dense = j.at("lag_dense").get<std::vector<std::size_t>>();
  c.fusion_dense = j.at("fusion_dense").get<std::vector<std::size_t>>();
  c.dropout = j.at("dropout").get<double>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.batch_norm.momentum = j.at("bn_momentum").get<double>();
  c.batch_norm.epsilon = j.at("bn_epsilon").get<double>();
  c.validate();
  return c;
}

json qp_json(const QuantParams& p) {
  return {{"scale", p.scale}, {"zero_point", p.zero_point},
          {"scheme", std::string(to_string(p.scheme))}};
}

QuantParams qp_from(const json& j) {
  QuantParams p;
  p.scale = j.at("scale").get<double>();
  p.zero_point = j.at("zero_point").get<std::int32_t>();
  p.scheme = parse_quant_scheme(j.at("scheme").get<std::string>());
  if (!(p.scale > 0.0) || p.zero_point < -128 || p.zero_point > 127) {
    fail("metadata", "invalid quantization parameters");
  }
  return p;
}

json range_json(const HourRange& r) { return json::array({r.start, r.end}); }
HourRange range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

// One directory entry plus its bytes.
struct Blob {
  std::string name;
  std::string dtype;
  Shape shape;
  const void* data;
  std::size_t nbytes;
};

std::size_t dtype_size(std::string_view dtype) {
  if (dtype == "float32" || dtype == "int32") return 4;
  if (dtype == "int8") return 1;
  fail("metadata", "unknown dtype '" + std::string(dtype) + "'");
}

std::vector<Blob> blobs_of(const Artifact& a) {
  std::vector<Blob> blobs;
  if (a.quantized) {
    for (const auto& L : a.quantized->layers()) {
      const auto& s = L.spec;
      const Shape kshape = s.kind == LayerKind::dense ? Shape{s.inputs, s.outputs}
                                                      : Shape{s.kernel_size, s.inputs, s.outputs};
      blobs.push_back({s.name + "/kernel", "int8", kshape, L.weights.data(), L.weights.size()});
      blobs.push_back({s.name + "/bias", "int32", {s.outputs}, L.bias.data(), L.bias.size() * 4});
    }
  } else {
    for (const auto& t : a.float_model->state()) {
      blobs.push_back({t.name, "float32", t.tensor.shape(), t.tensor.data().data(),
                       t.tensor.size() * sizeof(float)});
    }
  }
  return blobs;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename T>
void put_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

const ModelConfig& Artifact::config() const {
  if (quantized) return quantized->config();
  if (float_model) return float_model->config();
  throw StateError("artifact holds no model");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::size_t artifact_payload_bytes(const Artifact& artifact) {
  std::size_t total = 0;
  for (const auto& b : blobs_of(artifact)) total += b.nbytes;
  return total;
}

std::string serialize(const Artifact& a) {
  if (a.float_model.has_value() == a.quantized.has_value()) {
    throw ContractError("artifact must hold exactly one of a float or a quantized model");
  }
  std::string payload;
  json directory = json::array();
  for (const auto& b : blobs_of(a)) {
    directory.push_back({{"name", b.name},
                         {"dtype", b.dtype},
                         {"shape", b.shape},
                         {"offset", payload.size()},
                         {"nbytes", b.nbytes}});
    payload.append(static_cast<const char*>(b.data), b.nbytes);
  }

  json meta;
  meta["format"] = "ladbnet-model";
  meta["kind"] = a.quantized ? "int8" : "float32";
  meta["folded"] = a.quantized ? true : a.float_model->folded();
  meta["config"] = config_json(a.config());
  meta["tensors"] = directory;
  meta["payload_bytes"] = payload.size();
  meta["payload_fnv1a64"] = hex64(fnv1a64(payload));
  meta["seed"] = a.seed;
  if (a.scaler) {
    meta["scaler"] = {{"columns", a.scaler->columns}, {"min", a.scaler->min}, {"max", a.scaler->max}};
  } else {
    meta["scaler"] = nullptr;
  }
  meta["features"] = {{"night", range_json(a.features.night)},
                      {"business_hours", range_json(a.features.business_hours)},
                      {"morning_peak", range_json(a.features.morning_peak)},
                      {"evening_peak", range_json(a.features.evening_peak)},
                      {"population_std", a.features.population_std}};
  json holidays = json::array();
  for (const auto d : a.holidays) holidays.push_back(format_date(d));
  meta["holidays"] = holidays;
  if (a.quantized) {
    json layers = json::array();
    for (const auto& L : a.quantized->layers()) {
      layers.push_back({{"name", L.spec.name},
                        {"weight", qp_json(L.weight_params)},
                        {"input", qp_json(L.input_params)},
                        {"output", qp_json(L.output_params)}});
    }
    meta["quant"] = {{"input", qp_json(a.quantized->input_params())},
                     {"fusion", qp_json(a.quantized->fusion_params())},
                     {"layers", layers}};
  }

  const std::string text = meta.dump();
  std::string out;
  out.reserve(kHeaderBytes + text.size() + payload.size());
  out.append(kMagic, 4);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += payload;
  return out;
}

Artifact deserialize(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) fail("header", "file shorter than the 16-byte header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail("header", "bad magic (expected \"LADB\")");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion) {
    fail("header", "unsupported version " + std::to_string(version));
  }
  const auto meta_len = get_le<std::uint64_t>(bytes, 8);
  if (meta_len > bytes.size() - kHeaderBytes) fail("metadata", "truncated metadata block");

  json meta;
  try {
    meta = json::parse(bytes.substr(kHeaderBytes, meta_len));
  } catch (const json::exception& e) {
    fail("metadata", std::string("invalid JSON: ") + e.what());
  }
  const std::string_view payload = bytes.substr(kHeaderBytes + meta_len);

  Artifact a;
  try {
    if (meta.at("format") != "ladbnet-model") fail("metadata", "not a ladbnet model");
    const std::string kind = meta.at("kind").get<std::string>();
    if (kind != "float32" && kind != "int8") fail("metadata", "unknown model kind '" + kind + "'");
    const auto declared = meta.at("payload_bytes").get<std::size_t>();
    if (payload.size() != declared) {
      fail("payload", "expected " + std::to_string(declared) + " bytes, found " +
                          std::to_string(payload.size()));
    }
    if (meta.at("payload_fnv1a64").get<std::string>() != hex64(fnv1a64(payload))) {
      fail("payload", "checksum mismatch");
    }

    ModelConfig config;
    try {
      config = config_from(meta.at("config"));
    } catch (const ConfigError& e) {
      fail("metadata", std::string("invalid config: ") + e.what());
    }

    // Directory: name -> (dtype, shape, bytes).
    struct Entry {
      std::string dtype;
      Shape shape;
      std::string_view bytes;
    };
    std::vector<std::pair<std::string, Entry>> entries;
    std::size_t expected_offset = 0;
    for (const auto& t : meta.at("tensors")) {
      Entry e;
      e.dtype = t.at("dtype").get<std::string>();
      e.shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto nbytes = t.at("nbytes").get<std::size_t>();
      if (offset != expected_offset || nbytes != nn::numel(e.shape) * dtype_size(e.dtype) ||
          offset + nbytes > payload.size()) {
        fail("metadata", "inconsistent directory entry '" + t.at("name").get<std::string>() + "'");
      }
      expected_offset += nbytes;
      e.bytes = payload.substr(offset, nbytes);
      entries.emplace_back(t.at("name").get<std::string>(), std::move(e));
    }
    if (expected_offset != payload.size()) fail("metadata", "directory does not cover the payload");
    auto find = [&](const std::string& name, std::string_view dtype) -> const Entry* {
      for (const auto& [n, e] : entries) {
        if (n == name) {
          if (e.dtype != dtype) fail("metadata", "tensor '" + name + "' has dtype " + e.dtype);
          return &e;
        }
      }
      return nullptr;
    };
    auto float_tensor = [&](const std::string& name, bool trainable) {
      const Entry* e = find(name, "float32");
      if (!e) return Tensor<float>();
      std::vector<float> values(nn::numel(e->shape));
      std::memcpy(values.data(), e->bytes.data(), e->bytes.size());
      return Tensor<float>(e->shape, std::move(values), trainable);
    };

    const auto plan = layer_plan(config);
    if (kind == "float32") {
      const bool folded = meta.at("folded").get<bool>();
      std::vector<Model::LayerTensors> tensors;
      for (const auto& spec : plan) {
        Model::LayerTensors t;
        t.kernel = float_tensor(spec.name + "/kernel", true);
        t.bias = float_tensor(spec.name + "/bias", true);
        t.gamma = float_tensor(spec.name + "/bn_gamma", true);
        t.beta = float_tensor(spec.name + "/bn_beta", true);
        t.mean = float_tensor(spec.name + "/bn_mean", false);
        t.var = float_tensor(spec.name + "/bn_var", false);
        tensors.push_back(std::move(t));
      }
      try {
        a.float_model = Model::from_tensors(config, std::move(tensors), folded);
      } catch (const StructuralError& e) {
        fail("metadata", e.what());
      }
    } else {
      const auto& q = meta.at("quant");
      const auto& qlayers = q.at("layers");
      if (qlayers.size() != plan.size()) fail("metadata", "quantization table size mismatch");
      std::vector<QuantLayer> layers;
      for (std::size_t i = 0; i < plan.size(); ++i) {
        QuantLayer L;
        L.spec = plan[i];
        const auto& ql = qlayers.at(i);
        if (ql.at("name").get<std::string>() != plan[i].name) {
          fail("metadata", "quantization table out of order at '" + plan[i].name + "'");
        }
        L.weight_params = qp_from(ql.at("weight"));
        L.input_params = qp_from(ql.at("input"));
        L.output_params = qp_from(ql.at("output"));
        const Entry* w = find(plan[i].name + "/kernel", "int8");
        const Entry* b = find(plan[i].name + "/bias", "int32");
        if (!w || !b) fail("metadata", "missing tensors for layer '" + plan[i].name + "'");
        L.weights.resize(w->bytes.size());
        std::memcpy(L.weights.data(), w->bytes.data(), w->bytes.size());
        L.bias.resize(b->bytes.size() / 4);
        std::memcpy(L.bias.data(), b->bytes.data(), b->bytes.size());
        layers.push_back(std::move(L));
      }
      try {
        a.quantized = QuantizedModel::from_parts(config, qp_from(q.at("input")),
                                                 qp_from(q.at("fusion")), std::move(layers));
      } catch (const StructuralError& e) {
        fail("metadata", e.what());
      }
    }

    if (!meta.at("scaler").is_null()) {
      ScalerParams s;
      s.columns = meta["scaler"].at("columns").get<std::vector<std::string>>();
      s.min = meta["scaler"].at("min").get<std::vector<double>>();
      s.max = meta["scaler"].at("max").get<std::vector<double>>();
      MinMaxScaler check(s);  // validates the column contract
      a.scaler = std::move(s);
    }
    const auto& f = meta.at("features");
    a.features.night = range_from(f.at("night"));
    a.features.business_hours = range_from(f.at("business_hours"));
    a.features.morning_peak = range_from(f.at("morning_peak"));
    a.features.evening_peak = range_from(f.at("evening_peak"));
    a.features.population_std = f.at("population_std").get<bool>();
    for (const auto& d : meta.at("holidays")) a.holidays.push_back(parse_date(d.get<std::string>()));
    a.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    fail("metadata", std::string("missing or mistyped field: ") + e.what());
  } catch (const Error& e) {
    fail("metadata", e.what());
  }
  return a;
}

void save_artifact(const std::filesystem::path& path, const Artifact& artifact) {
  const std::string bytes = serialize(artifact);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Artifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace ladbnet
