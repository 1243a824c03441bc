#include "bfseg/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "bfseg/errors.hpp"
#include "bfseg/io.hpp"
#include "bfseg/label_pyramid.hpp"

namespace bfseg {
namespace fs = std::filesystem;

namespace {

using Rgb = std::array<double, 3>;

struct Placement {
  std::vector<std::pair<int, int>> pixels;
};

// Pixel centres inside a rectangle of size (w, h) centred at (cx, cy) and rotated by angle.
Placement rasterize(double cx, double cy, int w, int h, double angle, int size) {
  Placement p;
  if (angle == 0.0) {
    const int x0 = static_cast<int>(std::lround(cx - w / 2.0));
    const int y0 = static_cast<int>(std::lround(cy - h / 2.0));
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) {
        if (x >= 0 && y >= 0 && x < size && y < size) p.pixels.emplace_back(y, x);
      }
    }
    return p;
  }
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  const double reach = 0.5 * std::hypot(w, h) + 1.0;
  const int ylo = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int yhi = std::min(size - 1, static_cast<int>(std::ceil(cy + reach)));
  const int xlo = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int xhi = std::min(size - 1, static_cast<int>(std::ceil(cx + reach)));
  for (int y = ylo; y <= yhi; ++y) {
    for (int x = xlo; x <= xhi; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double u = dx * ca + dy * sa;
      const double v = -dx * sa + dy * ca;
      if (std::fabs(u) <= w / 2.0 && std::fabs(v) <= h / 2.0) p.pixels.emplace_back(y, x);
    }
  }
  return p;
}

// A placement is accepted only if it keeps a one-pixel gap to existing buildings.
bool is_free(const LabelRaster& label, const Placement& p) {
  for (auto [y, x] : p.pixels) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = y + dy;
        const int xx = x + dx;
        if (yy >= 0 && xx >= 0 && yy < label.height && xx < label.width && label(yy, xx)) return false;
      }
    }
  }
  return true;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Tensor rotate_ccw(const Tensor& t) {
  Tensor out(t.channels, t.width, t.height);
  for (int c = 0; c < t.channels; ++c) {
    for (int r = 0; r < out.height; ++r) {
      for (int q = 0; q < out.width; ++q) out.at(c, r, q) = t.at(c, q, t.width - 1 - r);
    }
  }
  return out;
}

LabelRaster rotate_ccw(const LabelRaster& g) {
  LabelRaster out(g.width, g.height);
  for (int r = 0; r < out.height; ++r) {
    for (int q = 0; q < out.width; ++q) out(r, q) = g(q, g.width - 1 - r);
  }
  return out;
}

template <typename Get, typename Set>
void flip(int h, int w, bool horizontal, Get get, Set set) {
  for (int r = 0; r < h; ++r) {
    for (int q = 0; q < w; ++q) {
      if (horizontal) {
        set(r, q, get(r, w - 1 - q));
      } else {
        set(r, q, get(h - 1 - r, q));
      }
    }
  }
}

Sample flipped(const Sample& s, bool horizontal) {
  Sample out = s;
  for (int c = 0; c < s.image.channels; ++c) {
    flip(s.image.height, s.image.width, horizontal, [&](int r, int q) { return s.image.at(c, r, q); },
         [&](int r, int q, double v) { out.image.at(c, r, q) = v; });
  }
  flip(s.label.height, s.label.width, horizontal, [&](int r, int q) { return s.label(r, q); },
       [&](int r, int q, std::uint8_t v) { out.label(r, q) = v; });
  return out;
}

std::map<std::string, fs::path> png_stems(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") out[entry.path().stem().string()] = entry.path();
  }
  return out;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SynthConfig::validate() const {
  if (size <= 0 || size % kMaxStride != 0) throw ConfigError("synthetic patch size must be a positive multiple of 32");
  if (min_buildings < 0 || max_buildings < min_buildings) throw ConfigError("invalid building count range");
  if (min_building_size < 2 || max_building_size < min_building_size) {
    throw ConfigError("building sizes must satisfy 2 <= min <= max");
  }
  if (max_building_size > size) throw ConfigError("max building size exceeds patch size");
  if (noise < 0.0) throw ConfigError("noise amplitude must be non-negative");
  if (roads < 0) throw ConfigError("road count must be non-negative");
}

Sample generate_scene(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const int n = cfg.size;
  Sample s;
  s.image = Tensor(3, n, n);
  s.label = LabelRaster(n, n);

  // Background: vegetation/soil base colour with low-frequency texture.
  const Rgb base = {uniform(rng, 0.25, 0.40), uniform(rng, 0.35, 0.50), uniform(rng, 0.20, 0.32)};
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::array<Wave, 3>, 3> waves;
  for (auto& channel : waves) {
    for (auto& w : channel) {
      w = {uniform(rng, 0.02, 0.15), uniform(rng, 0.02, 0.15), uniform(rng, 0.0, 2 * std::numbers::pi),
           uniform(rng, 0.02, 0.06)};
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double v = base[c];
        for (const auto& w : waves[c]) v += w.amp * std::sin(2 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
        s.image.at(c, y, x) = v;
      }
    }
  }

  // Roads: long grey strips that are not buildings.
  for (int r = 0; r < cfg.roads; ++r) {
    const bool horizontal = uniform_int(rng, 0, 1) == 1;
    const int width = uniform_int(rng, 2, 4);
    const int offset = uniform_int(rng, 0, n - width);
    const double grey = uniform(rng, 0.45, 0.60);
    for (int a = offset; a < offset + width; ++a) {
      for (int b = 0; b < n; ++b) {
        const int y = horizontal ? a : b;
        const int x = horizontal ? b : a;
        for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = grey;
      }
    }
  }

  static constexpr std::array<Rgb, 3> kRoofs = {{{0.78, 0.76, 0.72}, {0.72, 0.38, 0.30}, {0.52, 0.62, 0.78}}};
  const int count = uniform_int(rng, cfg.min_buildings, cfg.max_buildings);
  for (int b = 0; b < count; ++b) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int w = uniform_int(rng, cfg.min_building_size, cfg.max_building_size);
      const int h = uniform_int(rng, cfg.min_building_size, cfg.max_building_size);
      const double angle = cfg.rotate ? uniform(rng, 0.0, std::numbers::pi) : 0.0;
      const double margin = 0.5 * std::max(w, h);
      const double cx = uniform(rng, margin, n - margin);
      const double cy = uniform(rng, margin, n - margin);
      Placement p = rasterize(cx, cy, w, h, angle, n);
      if (p.pixels.empty() || !is_free(s.label, p)) continue;

      Rgb roof = kRoofs[uniform_int(rng, 0, static_cast<int>(kRoofs.size()) - 1)];
      for (auto& v : roof) v += uniform(rng, -0.05, 0.05);
      const double shade = uniform(rng, -0.004, 0.004);
      for (auto [y, x] : p.pixels) s.label(y, x) = 1;
      for (auto [y, x] : p.pixels) {
        for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = roof[c] + shade * (x - cx + y - cy);
        // Cast shadow one pixel down-right onto non-building ground.
        const int sy = y + 1;
        const int sx = x + 1;
        if (sy < n && sx < n && !s.label(sy, sx)) {
          for (int c = 0; c < 3; ++c) s.image.at(c, sy, sx) *= 0.6;
        }
      }
      break;
    }
  }

  std::normal_distribution<double> noise(0.0, cfg.noise > 0.0 ? cfg.noise : 1.0);
  for (auto& v : s.image.data) {
    if (cfg.noise > 0.0) v += noise(rng);
    v = std::clamp(v, 0.0, 1.0);
  }
  return s;
}

std::vector<Sample> generate_dataset(const SynthConfig& cfg, int count, const std::string& id_prefix) {
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    SynthConfig c = cfg;
    c.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Sample s = generate_scene(c);
    s.id = fmt::format("{}_{:05d}", id_prefix, i);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_dataset(const fs::path& root) {
  const auto images = png_stems(root / "images");
  const auto labels = png_stems(root / "labels");
  std::vector<std::string> missing;
  for (const auto& [stem, _] : images) {
    if (!labels.contains(stem)) missing.push_back("labels/" + stem + ".png");
  }
  for (const auto& [stem, _] : labels) {
    if (!images.contains(stem)) missing.push_back("images/" + stem + ".png");
  }
  if (!missing.empty()) throw IoError(fmt::format("dataset {} is missing: {}", root.string(), fmt::join(missing, ", ")));

  std::vector<Sample> out;
  for (const auto& [stem, image_path] : images) {  // std::map iterates in id order
    const Image8 rgb = read_png(image_path, 3);
    const Image8 gray = read_png(labels.at(stem), 1);
    if (rgb.width != gray.width || rgb.height != gray.height) {
      throw DimensionError(fmt::format("{}: image is {}x{} but label is {}x{}", stem, rgb.height, rgb.width,
                                       gray.height, gray.width));
    }
    if (rgb.height % kMaxStride != 0 || rgb.width % kMaxStride != 0) {
      throw DimensionError(fmt::format("{}: size {}x{} is not divisible by 32; crop or resize the patch", stem,
                                       rgb.height, rgb.width));
    }
    Sample s;
    s.id = stem;
    s.image = image_to_tensor(rgb);
    s.label = LabelRaster(gray.height, gray.width);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) s.label.values[i] = gray.pixels[i] >= 128 ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(const fs::path& root, const std::vector<Sample>& samples) {
  std::set<std::string> seen;
  for (const auto& s : samples) {
    if (!seen.insert(s.id).second) throw ConfigError("duplicate sample id " + s.id);
    write_png(root / "images" / (s.id + ".png"), tensor_to_image(s.image));
    write_png(root / "labels" / (s.id + ".png"), label_to_image(s.label));
  }
}

void AugmentPolicy::validate(int height, int width) const {
  for (double p : {rotate_probability, hflip_probability, vflip_probability}) {
    if (p < 0.0 || p > 1.0) throw ConfigError("augmentation probabilities must lie in [0,1]");
  }
  if (rotate_probability > 0.0 && height != width) {
    throw ConfigError(fmt::format("rotation augmentation needs square patches, got {}x{}", height, width));
  }
}

AugmentDraws draw_augmentation(std::mt19937_64& rng, const AugmentPolicy& policy) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AugmentDraws d;
  if (u(rng) < policy.rotate_probability) d.quarter_turns = uniform_int(rng, 1, 3);
  d.hflip = u(rng) < policy.hflip_probability;
  d.vflip = u(rng) < policy.vflip_probability;
  return d;
}

Sample apply_augmentation(const Sample& s, const AugmentDraws& draws) {
  Sample out = s;
  if (draws.quarter_turns != 0 && s.image.height != s.image.width) {
    throw ConfigError("rotation augmentation needs square patches");
  }
  for (int k = 0; k < draws.quarter_turns; ++k) {
    out.image = rotate_ccw(out.image);
    out.label = rotate_ccw(out.label);
  }
  if (draws.hflip) out = flipped(out, true);
  if (draws.vflip) out = flipped(out, false);
  return out;
}

Sample augment(const Sample& s, std::mt19937_64& rng, const AugmentPolicy& policy) {
  return apply_augmentation(s, draw_augmentation(rng, policy));
}

}  // namespace bfseg
