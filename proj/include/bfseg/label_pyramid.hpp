#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bfseg/tensor.hpp"

namespace bfseg {

/// Decoder output strides, finest first.
inline constexpr std::array<int, 4> kStrides = {4, 8, 16, 32};
inline constexpr int kMaxStride = 32;

/// Area-downsampled label. Each cell stores the integer count of building pixels
/// in its factor x factor source block, so values and purity are exact.
struct SoftLabel {
  int factor = 1;
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> block_sums;

  std::uint32_t block_area() const { return static_cast<std::uint32_t>(factor) * factor; }
  double value(std::size_t i) const { return static_cast<double>(block_sums[i]) / block_area(); }
  double value(int r, int c) const { return value(static_cast<std::size_t>(r) * width + c); }
  std::size_t size() const { return block_sums.size(); }

  /// Values as a one-channel tensor.
  Tensor to_tensor() const;

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;
};

struct MaskLevel {
  int stride = 0;
  SoftLabel soft;
  PurityMask mask;
};

/// One (soft label, purity mask) pair per decoder stride, ordered as kStrides.
struct MaskPyramid {
  std::array<MaskLevel, 4> levels;

  const MaskLevel& at_stride(int stride) const;
};

/// Throws DomainError unless every value is 0 or 1.
void require_binary(const LabelRaster& y);

/// Block-average downsampling of a binary raster by `factor`.
SoftLabel downsample_label(const LabelRaster& y, int factor);

/// Further downsampling of an already-downsampled label; block sums compose exactly.
SoftLabel downsample_label(const SoftLabel& y, int factor);

/// m = 1 where floor(y_down) == ceil(y_down), i.e. the covered source block is uniform.
PurityMask purity_mask(const SoftLabel& y_down);

/// Same rule for real-valued input in [0,1]; throws DomainError outside that range.
PurityMask purity_mask(const Grid<double>& y_down);

MaskPyramid build_mask_pyramid(const LabelRaster& y);

/// Block-average downsampling of a real-valued single-channel tensor.
Tensor block_average(const Tensor& x, int factor);

}  // namespace bfseg
