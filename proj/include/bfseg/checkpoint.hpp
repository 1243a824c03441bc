#pragma once

#include <filesystem>
#include <string>

#include "bfseg/model.hpp"
#include "bfseg/parameters.hpp"

namespace bfseg {

inline constexpr int kCheckpointVersion = 1;

/// Model configuration plus every parameter array, by name.
struct Checkpoint {
  ModelConfig config;
  ParameterSet params;
  int epoch = 0;

  static Checkpoint from_model(const Model& model, int epoch = 0);
  Model to_model() const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Text header (magic, version, config echo) followed by named little-endian
/// float64 arrays. Round-trips bitwise.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bfseg
