#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ladbnet/dataset.hpp"
#include "ladbnet/features.hpp"
#include "ladbnet/model.hpp"
#include "ladbnet/quant.hpp"

namespace ladbnet {

// File layout (all integers little-endian):
//   bytes 0..3   magic "LADB"
//   bytes 4..7   uint32 format version (1)
//   bytes 8..15  uint64 metadata length L
//   L bytes      metadata, canonical JSON (sorted keys, no whitespace)
//   payload      tensors back to back in directory order
// The metadata holds the model config, the tensor directory (name, dtype,
// shape, offset, nbytes), the scaler record, feature options, holidays,
// quantization parameters for int8 models, and an FNV-1a 64 checksum of
// the payload.

inline constexpr std::uint32_t kFormatVersion = 1;

/// A stored model plus everything needed to serve it.
struct Artifact {
  std::optional<Model> float_model;
  std::optional<QuantizedModel> quantized;
  std::optional<ScalerParams> scaler;
  FeatureOptions features;
  std::vector<std::int64_t> holidays;  // day numbers
  std::uint64_t seed = 0;

  bool is_quantized() const { return quantized.has_value(); }
  const ModelConfig& config() const;
};

std::string serialize(const Artifact& artifact);
/// Throws FormatError naming the section (header, metadata, payload).
Artifact deserialize(std::string_view bytes);

void save_artifact(const std::filesystem::path& path, const Artifact& artifact);
Artifact load_artifact(const std::filesystem::path& path);

/// Size of the tensor payload that serialize() writes.
std::size_t artifact_payload_bytes(const Artifact& artifact);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ladbnet
