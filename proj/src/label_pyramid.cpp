#include "bfseg/label_pyramid.hpp"

#include <cmath>
#include <string>

#include "bfseg/errors.hpp"

namespace bfseg {
namespace {

void require_factor(int height, int width, int factor) {
  if (factor < 1 || (factor & (factor - 1)) != 0) {
    throw DimensionError("downsampling factor must be a power of two, got " + std::to_string(factor));
  }
  if (height % factor != 0 || width % factor != 0) {
    throw DimensionError("raster " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible by factor " + std::to_string(factor));
  }
}

}  // namespace

Tensor SoftLabel::to_tensor() const {
  Tensor t(1, height, width);
  for (std::size_t i = 0; i < size(); ++i) t.data[i] = value(i);
  return t;
}

const MaskLevel& MaskPyramid::at_stride(int stride) const {
  for (const auto& level : levels) {
    if (level.stride == stride) return level;
  }
  throw DimensionError("no mask level at stride " + std::to_string(stride));
}

void require_binary(const LabelRaster& y) {
  for (auto v : y.values) {
    if (v > 1) throw DomainError("label raster must be binary (0/1), found value " + std::to_string(v));
  }
}

SoftLabel downsample_label(const LabelRaster& y, int factor) {
  require_factor(y.height, y.width, factor);
  require_binary(y);
  SoftLabel out;
  out.factor = factor;
  out.height = y.height / factor;
  out.width = y.width / factor;
  out.block_sums.assign(static_cast<std::size_t>(out.height) * out.width, 0);
  for (int r = 0; r < y.height; ++r) {
    const auto* row = &y.values[static_cast<std::size_t>(r) * y.width];
    auto* dst = &out.block_sums[static_cast<std::size_t>(r / factor) * out.width];
    for (int c = 0; c < y.width; ++c) dst[c / factor] += row[c];
  }
  return out;
}

SoftLabel downsample_label(const SoftLabel& y, int factor) {
  require_factor(y.height, y.width, factor);
  SoftLabel out;
  out.factor = y.factor * factor;
  out.height = y.height / factor;
  out.width = y.width / factor;
  out.block_sums.assign(static_cast<std::size_t>(out.height) * out.width, 0);
  for (int r = 0; r < y.height; ++r) {
    for (int c = 0; c < y.width; ++c) {
      out.block_sums[static_cast<std::size_t>(r / factor) * out.width + c / factor] +=
          y.block_sums[static_cast<std::size_t>(r) * y.width + c];
    }
  }
  return out;
}

PurityMask purity_mask(const SoftLabel& y_down) {
  PurityMask m(y_down.height, y_down.width);
  const auto area = y_down.block_area();
  for (std::size_t i = 0; i < y_down.size(); ++i) {
    const auto s = y_down.block_sums[i];
    if (s > area) throw DomainError("soft label value exceeds 1");
    m.values[i] = (s == 0 || s == area) ? 1 : 0;
  }
  return m;
}

PurityMask purity_mask(const Grid<double>& y_down) {
  PurityMask m(y_down.height, y_down.width);
  for (std::size_t i = 0; i < y_down.size(); ++i) {
    const double v = y_down.values[i];
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("soft label value outside [0,1]");
    m.values[i] = std::floor(v) == std::ceil(v) ? 1 : 0;
  }
  return m;
}

MaskPyramid build_mask_pyramid(const LabelRaster& y) {
  if (y.height % kMaxStride != 0 || y.width % kMaxStride != 0) {
    throw DimensionError("label " + std::to_string(y.height) + "x" + std::to_string(y.width) +
                         " must have both sides divisible by 32");
  }
  MaskPyramid pyramid;
  // Each level is derived from the previous one, which is exact on block sums.
  SoftLabel soft = downsample_label(y, kStrides[0]);
  for (std::size_t i = 0; i < kStrides.size(); ++i) {
    if (i > 0) soft = downsample_label(soft, kStrides[i] / kStrides[i - 1]);
    pyramid.levels[i] = MaskLevel{kStrides[i], soft, purity_mask(soft)};
  }
  return pyramid;
}

Tensor block_average(const Tensor& x, int factor) {
  require_factor(x.height, x.width, factor);
  Tensor out(x.channels, x.height / factor, x.width / factor);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int c = 0; c < x.channels; ++c) {
    for (int r = 0; r < out.height; ++r) {
      for (int q = 0; q < out.width; ++q) {
        double sum = 0.0;
        for (int dr = 0; dr < factor; ++dr) {
          for (int dq = 0; dq < factor; ++dq) sum += x.at(c, r * factor + dr, q * factor + dq);
        }
        out.at(c, r, q) = sum * inv;
      }
    }
  }
  return out;
}

}  // namespace bfseg
