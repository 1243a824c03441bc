#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bfseg/tensor.hpp"

namespace bfseg {

/// Square convolution with "same" zero padding (kernel / 2).
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;

  int weight_count() const { return out_channels * in_channels * kernel * kernel; }
  int output_size(int n) const { return (n + 2 * (kernel / 2) - kernel) / stride + 1; }
};

/// Weights are laid out (out, in, ky, kx). When `cols` is non-null it receives the
/// lowered input needed by conv2d_backward.
Tensor conv2d_forward(const Tensor& x, const ConvSpec& spec, std::span<const double> weight,
                      std::span<const double> bias, std::vector<double>* cols = nullptr);

/// Accumulates into grad_weight / grad_bias and returns dL/dx (empty if !need_input_grad).
Tensor conv2d_backward(const Tensor& grad_out, const ConvSpec& spec, std::span<const double> weight,
                       const std::vector<double>& cols, int in_height, int in_width,
                       std::span<double> grad_weight, std::span<double> grad_bias,
                       bool need_input_grad = true);

/// Bilinear upsampling by an integer factor with half-pixel centres and edge clamping.
Tensor upsample_bilinear(const Tensor& x, int factor);

/// Adjoint of upsample_bilinear.
Tensor upsample_bilinear_backward(const Tensor& grad_out, int factor);

enum class Activation { relu, silu, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

Tensor activate(const Tensor& pre, Activation a);
/// grad_out * a'(pre).
Tensor activate_backward(const Tensor& grad_out, const Tensor& pre, Activation a);

Tensor concat_channels(std::span<const Tensor* const> parts);

void add_inplace(Tensor& dst, const Tensor& src);

}  // namespace bfseg
