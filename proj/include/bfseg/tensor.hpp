#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bfseg {

/// Row-major 2-D grid. Used for labels, masks and other single-channel rasters.
template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int h, int w, T fill = T{}) : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  T& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  const T& operator()(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }

  std::size_t size() const { return values.size(); }
  bool same_shape(const Grid& o) const { return height == o.height && width == o.width; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Binary ground-truth raster, 1 = building.
using LabelRaster = Grid<std::uint8_t>;

/// 1 = pure (supervised), 0 = hybrid (ignored).
using PurityMask = Grid<std::uint8_t>;

/// Dense channel-major (C, H, W) array of doubles. Single-channel tensors carry logits.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }

  std::span<double> channel(int c) { return {data.data() + c * plane(), plane()}; }
  std::span<const double> channel(int c) const { return {data.data() + c * plane(), plane()}; }

  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace bfseg
