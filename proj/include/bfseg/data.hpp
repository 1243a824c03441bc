#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bfseg/tensor.hpp"

namespace bfseg {

struct Sample {
  Tensor image;  // (3, H, W), values in [0,1]
  LabelRaster label;
  std::string id;
};

/// Parameters of the synthetic building-scene generator.
struct SynthConfig {
  int size = 64;
  int min_buildings = 3;
  int max_buildings = 8;
  int min_building_size = 4;
  int max_building_size = 20;
  double noise = 0.06;
  bool rotate = true;
  int roads = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One scene: filled, mutually separated rectangles on a textured background.
Sample generate_scene(const SynthConfig& cfg);

/// `count` scenes with per-sample seeds derived from cfg.seed and the index.
std::vector<Sample> generate_dataset(const SynthConfig& cfg, int count, const std::string& id_prefix = "synth");

/// Reads root/images/*.png (RGB) and root/labels/*.png (gray, >= 128 is building), sorted by id.
std::vector<Sample> load_dataset(const std::filesystem::path& root);

/// Writes samples in the layout read by load_dataset.
void save_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples);

struct AugmentPolicy {
  double rotate_probability = 0.25;
  double hflip_probability = 0.25;
  double vflip_probability = 0.25;

  /// Rotation needs square patches; throws ConfigError otherwise.
  void validate(int height, int width) const;
};

struct AugmentDraws {
  int quarter_turns = 0;  // counter-clockwise, 0..3
  bool hflip = false;
  bool vflip = false;

  bool is_identity() const { return quarter_turns == 0 && !hflip && !vflip; }
};

AugmentDraws draw_augmentation(std::mt19937_64& rng, const AugmentPolicy& policy = {});

/// Applies rotation, then horizontal flip, then vertical flip to image and label alike.
Sample apply_augmentation(const Sample& s, const AugmentDraws& draws);

Sample augment(const Sample& s, std::mt19937_64& rng, const AugmentPolicy& policy = {});

/// Stateless 64-bit mixer used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bfseg
