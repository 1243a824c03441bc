#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfseg/layers.hpp"
#include "bfseg/parameters.hpp"
#include "bfseg/tensor.hpp"

namespace bfseg {

/// Encoder output channels (c3, c4, c5, c6); strictly increasing.
using ChannelProfile = std::array<int, 4>;

void validate_profile(const ChannelProfile& profile);

/// Decoder stage s (1 = coarsest) runs at stride 32 / 2^(s-1).
constexpr int stage_stride(int stage) { return 32 >> (stage - 1); }
inline constexpr int kStages = 4;

struct ModelConfig {
  int input_channels = 3;
  int encoder_base_channels = 16;
  int decoder_width = 64;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  /// (c, 2c, 4c, 8c).
  ChannelProfile profile() const;
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// P3..P6 at strides 4, 8, 16, 32.
struct FeaturePyramid {
  std::array<Tensor, 4> levels;
};

/// P'3..P'6, every level `decoder_width` channels.
struct CondensedPyramid {
  std::array<Tensor, 4> levels;
};

struct PredictionPyramid {
  /// Cls_1..Cls_4, strides 32, 16, 8, 4.
  std::array<Tensor, 4> stage_logits;
  /// delta(F_1)..delta(F_4); residuals[0] is the coarse classifier output Cls_1.
  std::array<Tensor, 4> residuals;
  /// Full-resolution logits.
  Tensor final_logits;

  const Tensor& logits_at_stride(int stride) const;
};

/// dL/d(logits) for each output of a PredictionPyramid. Empty tensors mean zero.
struct PredictionGradients {
  std::array<Tensor, 4> stage_logits;
  Tensor final_logits;
};

struct ConvLayer {
  std::string name;
  ConvSpec spec;
  std::size_t weight = 0;
  std::size_t bias = 0;
  /// Uniform init bound is gain / sqrt(fan_in).
  double init_gain = 1.0;
};

struct ConvTape {
  std::vector<double> cols;
  int in_height = 0;
  int in_width = 0;
};

struct EncoderTape {
  ConvTape stem;
  Tensor stem_pre;
  struct Stage {
    ConvTape down, res1, res2;
    Tensor down_pre, down_out, res1_pre, sum_pre;
  };
  std::array<Stage, 4> stages;
};

struct DecoderTape {
  std::array<ConvTape, 4> condense;  // indexed like FeaturePyramid
  CondensedPyramid condensed;
  std::array<ConvTape, 4> stage_conv;  // indexed by stage - 1
  std::array<Tensor, 4> stage_pre;
  std::array<Tensor, 4> features;
  std::array<ConvTape, 4> head;
};

/// Hierarchical convolutional encoder: a stride-2 stem followed by four stages,
/// each a stride-2 3x3 convolution and one 3x3 residual block.
class ToyEncoder {
 public:
  ToyEncoder(const ModelConfig& config, ParameterSet& params);

  FeaturePyramid forward(const ParameterSet& params, const Tensor& image, EncoderTape* tape = nullptr) const;
  void backward(const ParameterSet& params, const EncoderTape& tape, FeaturePyramid grad,
                Gradients& grads) const;

  const std::vector<ConvLayer>& layers() const { return layers_; }

 private:
  Activation activation_;
  std::vector<ConvLayer> layers_;  // stem, then (down, res1, res2) per stage
};

/// Densely connected coarse-to-fine decoder with residual prediction heads.
class LightFpnDecoder {
 public:
  LightFpnDecoder(const ChannelProfile& in_channels, int width, Activation activation, ParameterSet& params);

  /// Per-level 1x1 projection to `width` channels.
  CondensedPyramid condense(const ParameterSet& params, const FeaturePyramid& pyramid) const;

  /// F_s from the coarser reconstructed features F_1..F_{s-1} and P'_s.
  /// Stage 1 takes no deeper features and returns act(conv(P'_6)).
  Tensor reconstruct_feature(const ParameterSet& params, int stage, std::span<const Tensor> deeper,
                             const Tensor& condensed) const;

  /// delta(F_s): single-channel 3x3 convolution.
  Tensor residual_head(const ParameterSet& params, int stage, const Tensor& feature) const;

  PredictionPyramid decode(const ParameterSet& params, const FeaturePyramid& pyramid,
                           DecoderTape* tape = nullptr) const;

  /// Accumulates parameter gradients and returns dL/dP.
  FeaturePyramid backward(const ParameterSet& params, const DecoderTape& tape, const PredictionGradients& grad,
                          Gradients& grads) const;

  int width() const { return width_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }
  const ConvLayer& condense_layer(int level) const { return layers_[level]; }
  const ConvLayer& stage_layer(int stage) const { return layers_[4 + stage - 1]; }
  const ConvLayer& head_layer(int stage) const { return layers_[8 + stage - 1]; }

 private:
  Tensor stage_forward(const ParameterSet& params, int stage, std::span<const Tensor> deeper,
                       const Tensor& condensed, ConvTape* conv_tape, Tensor* pre) const;

  int width_;
  Activation activation_;
  std::vector<ConvLayer> layers_;  // condense_p3..p6, stage1..4, head1..4
};

struct ForwardTape {
  EncoderTape encoder;
  FeaturePyramid features;
  DecoderTape decoder;
};

/// Toy encoder followed by the LightFPN decoder, owning all parameters.
class Model {
 public:
  /// Seeded fan-in-scaled uniform initialisation, zero biases.
  explicit Model(ModelConfig config);
  /// Adopts previously trained parameters; names and shapes must match the topology.
  Model(ModelConfig config, const ParameterSet& params);

  const ModelConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }

  const ToyEncoder& encoder() const { return encoder_; }
  const LightFpnDecoder& decoder() const { return decoder_; }

  FeaturePyramid encode(const Tensor& image) const;
  PredictionPyramid forward(const Tensor& image, ForwardTape* tape = nullptr) const;
  Gradients backward(const ForwardTape& tape, const PredictionGradients& grad) const;

  /// Number of scalars in parameters whose name starts with "decoder.".
  std::size_t decoder_parameter_count() const;

 private:
  ModelConfig config_;
  ParameterSet params_;
  ToyEncoder encoder_;
  LightFpnDecoder decoder_;
};

/// Throws DimensionError unless the image is (C, H, W) with H, W divisible by 32.
void require_input_shape(const Tensor& image, int channels);

}  // namespace bfseg
