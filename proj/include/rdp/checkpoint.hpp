#pragma once

// Checkpoint file layout (all integers little-endian):
//
//   bytes 0..7    magic "RDPCKPT1"
//   bytes 8..11   uint32 manifest length L
//   bytes 12..    L bytes of JSON manifest
//   then          float64 payload, parameters concatenated in manifest order
//
// Manifest keys: format_version, depth, hidden, seed, epoch, config (the run
// configuration echo), params [{name, shape, offset}] with offsets counted in
// float64 elements, and payload_count.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdp/errors.hpp"
#include "rdp/model.hpp"

namespace rdp {

inline constexpr char kCheckpointMagic[8] = {'R', 'D', 'P', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ResidualMLP model;
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.config.is_object()) throw ValidationError("checkpoint config must be a JSON object");
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["depth"] = ckpt.model.depth();
  manifest["hidden"] = ckpt.model.hidden();
  manifest["seed"] = ckpt.seed;
  manifest["epoch"] = ckpt.epoch;
  manifest["config"] = ckpt.config;
  nlohmann::json params = nlohmann::json::array();
  std::size_t offset = 0;
  const auto named = ckpt.model.named_parameters();
  for (const auto& [name, tensor] : named) {
    params.push_back({{"name", name}, {"shape", tensor->shape()}, {"offset", offset}});
    offset += tensor->size();
  }
  manifest["params"] = std::move(params);
  manifest["payload_count"] = offset;

  const std::string text = manifest.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  const auto length = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((length >> (8 * i)) & 0xFF));
  out += text;
  out.reserve(out.size() + 8 * offset);
  for (const auto& [name, tensor] : named)
    for (double v : tensor->data()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

/// Parses and validates a checkpoint. Failures raise FormatError naming the
/// offending field.
inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 12) throw FormatError("header", "checkpoint shorter than its 12-byte header");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw FormatError("magic", "bad checkpoint magic");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t length = raw[8] | (raw[9] << 8) | (raw[10] << 16) | (static_cast<std::uint32_t>(raw[11]) << 24);
  if (12 + static_cast<std::size_t>(length) > bytes.size()) {
    throw FormatError("manifest_length", "manifest length exceeds file size");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(12, length));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest", std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.is_object()) throw FormatError("manifest", "manifest must be a JSON object");

  auto require_uint = [&](const char* key) -> std::uint64_t {
    if (!manifest.contains(key) || !manifest[key].is_number_unsigned()) {
      throw FormatError(key, std::string("manifest field '") + key + "' missing or not an unsigned integer");
    }
    return manifest[key].get<std::uint64_t>();
  };
  if (require_uint("format_version") != kCheckpointVersion) {
    throw FormatError("format_version", "unsupported checkpoint version");
  }
  const std::uint64_t depth = require_uint("depth");
  const std::uint64_t hidden = require_uint("hidden");
  if (depth < 1) throw FormatError("depth", "depth must be at least 1");
  if (hidden < 1) throw FormatError("hidden", "hidden must be at least 1");
  Checkpoint ckpt;
  ckpt.seed = require_uint("seed");
  ckpt.epoch = require_uint("epoch");
  const std::uint64_t payload_count = require_uint("payload_count");
  if (!manifest.contains("config") || !manifest["config"].is_object()) {
    throw FormatError("config", "manifest field 'config' missing or not an object");
  }
  ckpt.config = manifest["config"];
  ckpt.model = ResidualMLP(depth, hidden);

  if (!manifest.contains("params") || !manifest["params"].is_array()) {
    throw FormatError("params", "manifest field 'params' missing or not an array");
  }
  const auto& entries = manifest["params"];
  auto named = ckpt.model.named_parameters();
  if (entries.size() != named.size()) {
    throw FormatError("params", "expected " + std::to_string(named.size()) + " parameter entries, found " +
                                    std::to_string(entries.size()));
  }
  const std::size_t payload_begin = 12 + length;
  if (bytes.size() - payload_begin != 8 * payload_count) {
    throw FormatError("payload_count", "payload size does not match payload_count");
  }
  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& entry = entries[i];
    auto& [name, tensor] = named[i];
    const std::string where = "params[" + std::to_string(i) + "]";
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() || entry["name"] != name) {
      throw FormatError(where + ".name", "expected parameter '" + name + "'");
    }
    Shape shape;
    try {
      shape = entry.at("shape").get<Shape>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError(where + ".shape", "shape of '" + name + "' missing or malformed");
    }
    if (shape != tensor->shape()) {
      throw FormatError(where + ".shape", "shape of '" + name + "' is " + shape_string(shape) + ", expected " +
                                              shape_string(tensor->shape()));
    }
    if (!entry.contains("offset") || !entry["offset"].is_number_unsigned() ||
        entry["offset"].get<std::uint64_t>() != expected_offset) {
      throw FormatError(where + ".offset", "offset of '" + name + "' is not contiguous");
    }
    if (expected_offset + tensor->size() > payload_count) {
      throw FormatError(where + ".offset", "parameter '" + name + "' runs past the payload");
    }
    const unsigned char* src = raw + payload_begin + 8 * expected_offset;
    for (std::size_t j = 0; j < tensor->size(); ++j) (*tensor)[j] = std::bit_cast<double>(detail::get_u64(src + 8 * j));
    expected_offset += tensor->size();
  }
  if (expected_offset != payload_count) throw FormatError("payload_count", "payload_count disagrees with shapes");
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace rdp
