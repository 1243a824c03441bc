#include "bfseg/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "bfseg/errors.hpp"

namespace bfseg {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// C (m x n) = or += op(A) (m x k) * op(B) (k x n), all row-major and densely packed.
// Eigen's matrix-vector and small-size kernels pick their vectorised peel from the
// runtime address of the operands, so the same inputs at different addresses can
// round differently. Degenerate shapes take a fixed-order scalar loop instead,
// which keeps whole training runs bitwise reproducible.
void multiply(const double* a, bool a_transposed, const double* b, bool b_transposed, int m, int k, int n, double* c,
              bool accumulate) {
  auto at = [&](int i, int p) { return a_transposed ? a[static_cast<std::size_t>(p) * m + i] : a[static_cast<std::size_t>(i) * k + p]; };
  auto bt = [&](int p, int j) { return b_transposed ? b[static_cast<std::size_t>(j) * k + p] : b[static_cast<std::size_t>(p) * n + j]; };
  if (m == 1 || n == 1 || k == 1 || static_cast<long>(m) * n * k < 4096) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += at(i, p) * bt(p, j);
        double& dst = c[static_cast<std::size_t>(i) * n + j];
        dst = accumulate ? dst + acc : acc;
      }
    }
    return;
  }
  using ColMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
  MapMat out(c, m, n);
  // A transposed row-major buffer is the same memory as a column-major one.
  auto product = [&](const auto& lhs) {
    if (b_transposed) {
      Eigen::Map<const ColMat> rhs(b, k, n);
      if (accumulate) out.noalias() += lhs * rhs; else out.noalias() = lhs * rhs;
    } else {
      ConstMapMat rhs(b, k, n);
      if (accumulate) out.noalias() += lhs * rhs; else out.noalias() = lhs * rhs;
    }
  };
  if (a_transposed) {
    product(Eigen::Map<const ColMat>(a, m, k));
  } else {
    product(ConstMapMat(a, m, k));
  }
}

bool is_pointwise(const ConvSpec& s) { return s.kernel == 1 && s.stride == 1; }

void im2col(const Tensor& x, const ConvSpec& s, int out_h, int out_w, std::vector<double>& cols) {
  const int k = s.kernel;
  const int pad = k / 2;
  const std::size_t n = static_cast<std::size_t>(out_h) * out_w;
  cols.assign(static_cast<std::size_t>(s.in_channels) * k * k * n, 0.0);
  for (int c = 0; c < s.in_channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * s.stride + ky - pad;
          if (iy < 0 || iy >= x.height) continue;
          const double* src = x.data.data() + (static_cast<std::size_t>(c) * x.height + iy) * x.width;
          double* row = dst + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * s.stride + kx - pad;
            if (ix >= 0 && ix < x.width) row[ox] = src[ix];
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& cols, const ConvSpec& s, int out_h, int out_w, Tensor& dx) {
  const int k = s.kernel;
  const int pad = k / 2;
  const std::size_t n = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < s.in_channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * n;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * s.stride + ky - pad;
          if (iy < 0 || iy >= dx.height) continue;
          double* dst = dx.data.data() + (static_cast<std::size_t>(c) * dx.height + iy) * dx.width;
          const double* row = src + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * s.stride + kx - pad;
            if (ix >= 0 && ix < dx.width) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

// Source index pair and weight of the upper neighbour for each output coordinate.
struct Tap {
  int lo;
  int hi;
  double w;
};

std::vector<Tap> upsample_taps(int in_size, int factor) {
  std::vector<Tap> taps(static_cast<std::size_t>(in_size) * factor);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double src = (static_cast<double>(o) + 0.5) / factor - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in_size - 1) lo = in_size - 1;
    const int hi = lo + 1 < in_size ? lo + 1 : in_size - 1;
    taps[o] = Tap{lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const ConvSpec& spec, std::span<const double> weight,
                      std::span<const double> bias, std::vector<double>* cols) {
  if (x.channels != spec.in_channels) {
    throw DimensionError("conv expects " + std::to_string(spec.in_channels) + " input channels, got " +
                         std::to_string(x.channels));
  }
  const int out_h = spec.output_size(x.height);
  const int out_w = spec.output_size(x.width);
  const int kdim = spec.in_channels * spec.kernel * spec.kernel;
  const int n = out_h * out_w;
  Tensor y(spec.out_channels, out_h, out_w);

  std::vector<double> local;
  std::vector<double>& lowered = cols ? *cols : local;
  const double* input = nullptr;
  if (is_pointwise(spec)) {
    input = x.data.data();
    if (cols) cols->assign(x.data.begin(), x.data.end());
  } else {
    im2col(x, spec, out_h, out_w, lowered);
    input = lowered.data();
  }

  multiply(weight.data(), false, input, false, spec.out_channels, kdim, n, y.data.data(), false);
  MapMat out(y.data.data(), spec.out_channels, n);
  for (int o = 0; o < spec.out_channels; ++o) out.row(o).array() += bias[o];
  return y;
}

Tensor conv2d_backward(const Tensor& grad_out, const ConvSpec& spec, std::span<const double> weight,
                       const std::vector<double>& cols, int in_height, int in_width,
                       std::span<double> grad_weight, std::span<double> grad_bias, bool need_input_grad) {
  const int kdim = spec.in_channels * spec.kernel * spec.kernel;
  const int n = grad_out.height * grad_out.width;
  const double* dy = grad_out.data.data();
  multiply(dy, false, cols.data(), true, spec.out_channels, n, kdim, grad_weight.data(), true);
  for (int o = 0; o < spec.out_channels; ++o) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += dy[static_cast<std::size_t>(o) * n + i];
    grad_bias[o] += acc;
  }

  if (!need_input_grad) return {};
  Tensor dx(spec.in_channels, in_height, in_width);
  if (is_pointwise(spec)) {
    multiply(weight.data(), true, dy, false, kdim, spec.out_channels, n, dx.data.data(), false);
    return dx;
  }
  std::vector<double> dcols(static_cast<std::size_t>(kdim) * n);
  multiply(weight.data(), true, dy, false, kdim, spec.out_channels, n, dcols.data(), false);
  col2im(dcols, spec, grad_out.height, grad_out.width, dx);
  return dx;
}

Tensor upsample_bilinear(const Tensor& x, int factor) {
  if (factor == 1) return x;
  const auto ty = upsample_taps(x.height, factor);
  const auto tx = upsample_taps(x.width, factor);
  Tensor y(x.channels, x.height * factor, x.width * factor);
  for (int c = 0; c < x.channels; ++c) {
    for (int oy = 0; oy < y.height; ++oy) {
      const Tap& a = ty[oy];
      for (int ox = 0; ox < y.width; ++ox) {
        const Tap& b = tx[ox];
        const double top = (1.0 - b.w) * x.at(c, a.lo, b.lo) + b.w * x.at(c, a.lo, b.hi);
        const double bottom = (1.0 - b.w) * x.at(c, a.hi, b.lo) + b.w * x.at(c, a.hi, b.hi);
        y.at(c, oy, ox) = (1.0 - a.w) * top + a.w * bottom;
      }
    }
  }
  return y;
}

Tensor upsample_bilinear_backward(const Tensor& grad_out, int factor) {
  if (factor == 1) return grad_out;
  if (grad_out.height % factor != 0 || grad_out.width % factor != 0) {
    throw DimensionError("upsample gradient is not a multiple of the factor");
  }
  Tensor dx(grad_out.channels, grad_out.height / factor, grad_out.width / factor);
  const auto ty = upsample_taps(dx.height, factor);
  const auto tx = upsample_taps(dx.width, factor);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int oy = 0; oy < grad_out.height; ++oy) {
      const Tap& a = ty[oy];
      for (int ox = 0; ox < grad_out.width; ++ox) {
        const Tap& b = tx[ox];
        const double g = grad_out.at(c, oy, ox);
        const double gt = (1.0 - a.w) * g;
        const double gb = a.w * g;
        dx.at(c, a.lo, b.lo) += (1.0 - b.w) * gt;
        dx.at(c, a.lo, b.hi) += b.w * gt;
        dx.at(c, a.hi, b.lo) += (1.0 - b.w) * gb;
        dx.at(c, a.hi, b.hi) += b.w * gb;
      }
    }
  }
  return dx;
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "silu") return Activation::silu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected relu, silu or identity)");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::silu: return "silu";
    case Activation::identity: return "identity";
  }
  return "relu";
}

Tensor activate(const Tensor& pre, Activation a) {
  Tensor out = pre;
  switch (a) {
    case Activation::relu:
      for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::silu:
      for (auto& v : out.data) v = v / (1.0 + std::exp(-v));
      break;
    case Activation::identity:
      break;
  }
  return out;
}

Tensor activate_backward(const Tensor& grad_out, const Tensor& pre, Activation a) {
  Tensor g = grad_out;
  switch (a) {
    case Activation::relu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(pre.data[i] > 0.0)) g.data[i] = 0.0;
      }
      break;
    case Activation::silu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-pre.data[i]));
        g.data[i] *= s * (1.0 + pre.data[i] * (1.0 - s));
      }
      break;
    case Activation::identity:
      break;
  }
  return g;
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  const int h = parts.front()->height;
  const int w = parts.front()->width;
  int channels = 0;
  for (const Tensor* p : parts) {
    if (p->height != h || p->width != w) throw DimensionError("concat inputs differ in spatial size");
    channels += p->channels;
  }
  Tensor out(channels, h, w);
  auto it = out.data.begin();
  for (const Tensor* p : parts) it = std::copy(p->data.begin(), p->data.end(), it);
  return out;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  if (!dst.same_shape(src)) throw DimensionError("tensor add shape mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace bfseg
