#include "bfseg/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bfseg/errors.hpp"
#include "bfseg/label_pyramid.hpp"

namespace bfseg {
namespace {

constexpr double kActivatedGain = 2.449489742783178;  // sqrt(6)
constexpr double kLinearGain = 1.7320508075688772;    // sqrt(3)

ConvLayer register_conv(ParameterSet& params, std::string name, ConvSpec spec, double gain) {
  ConvLayer layer{std::move(name), spec, 0, 0, gain};
  layer.weight = params.add(layer.name + ".weight", {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
  layer.bias = params.add(layer.name + ".bias", {spec.out_channels});
  return layer;
}

Tensor run_conv(const ParameterSet& params, const ConvLayer& layer, const Tensor& x, ConvTape* tape) {
  if (tape) {
    tape->in_height = x.height;
    tape->in_width = x.width;
  }
  return conv2d_forward(x, layer.spec, params[layer.weight].values, params[layer.bias].values,
                        tape ? &tape->cols : nullptr);
}

Tensor run_conv_backward(const ParameterSet& params, const ConvLayer& layer, const ConvTape& tape,
                         const Tensor& grad_out, Gradients& grads, bool need_input_grad = true) {
  return conv2d_backward(grad_out, layer.spec, params[layer.weight].values, tape.cols, tape.in_height,
                         tape.in_width, grads[layer.weight], grads[layer.bias], need_input_grad);
}

void accumulate(Tensor& dst, const Tensor& src) {
  if (src.size() == 0) return;
  if (dst.size() == 0) {
    dst = src;
    return;
  }
  add_inplace(dst, src);
}

}  // namespace

void validate_profile(const ChannelProfile& profile) {
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] < 1) throw ConfigError("channel profile entries must be positive");
    if (i > 0 && profile[i] <= profile[i - 1]) {
      throw ConfigError("channel profile must be strictly increasing");
    }
  }
}

void require_input_shape(const Tensor& image, int channels) {
  if (image.channels != channels) {
    throw DimensionError("expected " + std::to_string(channels) + "-channel image, got " +
                         std::to_string(image.channels));
  }
  if (image.height <= 0 || image.width <= 0 || image.height % kMaxStride != 0 || image.width % kMaxStride != 0) {
    throw DimensionError("image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " must have both sides divisible by 32");
  }
}

ChannelProfile ModelConfig::profile() const {
  const int c = encoder_base_channels;
  return {c, 2 * c, 4 * c, 8 * c};
}

void ModelConfig::validate() const {
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  if (encoder_base_channels < 1) throw ConfigError("encoder_base_channels must be >= 1");
  if (decoder_width < 1) throw ConfigError("decoder_width must be >= 1");
}

const Tensor& PredictionPyramid::logits_at_stride(int stride) const {
  for (int s = 1; s <= kStages; ++s) {
    if (stage_stride(s) == stride) return stage_logits[s - 1];
  }
  if (stride == 1) return final_logits;
  throw DimensionError("no prediction at stride " + std::to_string(stride));
}

// ---------------------------------------------------------------------------
// Encoder

ToyEncoder::ToyEncoder(const ModelConfig& config, ParameterSet& params) : activation_(config.activation) {
  const auto profile = config.profile();
  layers_.push_back(register_conv(params, "encoder.stem", {config.input_channels, profile[0], 3, 2}, kActivatedGain));
  int in = profile[0];
  for (int k = 0; k < 4; ++k) {
    const int out = profile[k];
    const std::string prefix = "encoder.stage" + std::to_string(k + 1);
    layers_.push_back(register_conv(params, prefix + ".down", {in, out, 3, 2}, kActivatedGain));
    layers_.push_back(register_conv(params, prefix + ".res1", {out, out, 3, 1}, kActivatedGain));
    layers_.push_back(register_conv(params, prefix + ".res2", {out, out, 3, 1}, kActivatedGain));
    in = out;
  }
}

FeaturePyramid ToyEncoder::forward(const ParameterSet& params, const Tensor& image, EncoderTape* tape) const {
  Tensor stem_pre = run_conv(params, layers_[0], image, tape ? &tape->stem : nullptr);
  Tensor x = activate(stem_pre, activation_);
  if (tape) tape->stem_pre = std::move(stem_pre);

  FeaturePyramid out;
  for (int k = 0; k < 4; ++k) {
    const ConvLayer& down = layers_[1 + 3 * k];
    const ConvLayer& res1 = layers_[2 + 3 * k];
    const ConvLayer& res2 = layers_[3 + 3 * k];
    EncoderTape::Stage* st = tape ? &tape->stages[k] : nullptr;

    Tensor down_pre = run_conv(params, down, x, st ? &st->down : nullptr);
    Tensor d = activate(down_pre, activation_);
    Tensor r1_pre = run_conv(params, res1, d, st ? &st->res1 : nullptr);
    Tensor r1 = activate(r1_pre, activation_);
    Tensor sum = run_conv(params, res2, r1, st ? &st->res2 : nullptr);
    add_inplace(sum, d);
    x = activate(sum, activation_);
    out.levels[k] = x;
    if (st) {
      st->down_pre = std::move(down_pre);
      st->down_out = std::move(d);
      st->res1_pre = std::move(r1_pre);
      st->sum_pre = std::move(sum);
    }
  }
  return out;
}

void ToyEncoder::backward(const ParameterSet& params, const EncoderTape& tape, FeaturePyramid grad,
                          Gradients& grads) const {
  Tensor carry;  // gradient flowing into the output of stage k from stage k+1
  for (int k = 3; k >= 0; --k) {
    const ConvLayer& down = layers_[1 + 3 * k];
    const ConvLayer& res1 = layers_[2 + 3 * k];
    const ConvLayer& res2 = layers_[3 + 3 * k];
    const EncoderTape::Stage& st = tape.stages[k];

    Tensor g_out = std::move(grad.levels[k]);
    accumulate(g_out, carry);
    if (g_out.size() == 0) g_out = Tensor(st.sum_pre.channels, st.sum_pre.height, st.sum_pre.width);

    Tensor g_sum = activate_backward(g_out, st.sum_pre, activation_);
    Tensor g_r1 = run_conv_backward(params, res2, st.res2, g_sum, grads);
    Tensor g_r1_pre = activate_backward(g_r1, st.res1_pre, activation_);
    Tensor g_d = run_conv_backward(params, res1, st.res1, g_r1_pre, grads);
    add_inplace(g_d, g_sum);
    Tensor g_down_pre = activate_backward(g_d, st.down_pre, activation_);
    carry = run_conv_backward(params, down, st.down, g_down_pre, grads);
  }
  Tensor g_stem_pre = activate_backward(carry, tape.stem_pre, activation_);
  run_conv_backward(params, layers_[0], tape.stem, g_stem_pre, grads, false);
}

// ---------------------------------------------------------------------------
// Decoder

LightFpnDecoder::LightFpnDecoder(const ChannelProfile& in_channels, int width, Activation activation,
                                 ParameterSet& params)
    : width_(width), activation_(activation) {
  validate_profile(in_channels);
  if (width < 1) throw ConfigError("decoder width must be >= 1");
  for (int i = 0; i < 4; ++i) {
    layers_.push_back(register_conv(params, "decoder.condense_p" + std::to_string(i + 3),
                                    {in_channels[i], width, 1, 1}, kLinearGain));
  }
  for (int s = 1; s <= kStages; ++s) {
    layers_.push_back(register_conv(params, "decoder.stage" + std::to_string(s), {width * s, width, 3, 1},
                                    kActivatedGain));
  }
  for (int s = 1; s <= kStages; ++s) {
    layers_.push_back(register_conv(params, "decoder.head" + std::to_string(s), {width, 1, 3, 1}, kLinearGain));
  }
}

CondensedPyramid LightFpnDecoder::condense(const ParameterSet& params, const FeaturePyramid& pyramid) const {
  CondensedPyramid out;
  for (int i = 0; i < 4; ++i) out.levels[i] = run_conv(params, condense_layer(i), pyramid.levels[i], nullptr);
  return out;
}

Tensor LightFpnDecoder::stage_forward(const ParameterSet& params, int stage, std::span<const Tensor> deeper,
                                      const Tensor& condensed, ConvTape* conv_tape, Tensor* pre) const {
  if (stage < 1 || stage > kStages) throw DimensionError("decoder stage out of range");
  if (static_cast<int>(deeper.size()) != stage - 1) {
    throw DimensionError("stage " + std::to_string(stage) + " needs " + std::to_string(stage - 1) +
                         " coarser features");
  }
  std::vector<Tensor> upsampled;
  upsampled.reserve(deeper.size());
  for (std::size_t j = 0; j < deeper.size(); ++j) {
    upsampled.push_back(upsample_bilinear(deeper[j], 1 << (stage - 1 - static_cast<int>(j))));
  }
  std::vector<const Tensor*> parts;
  for (const auto& t : upsampled) parts.push_back(&t);
  parts.push_back(&condensed);
  for (const Tensor* p : parts) {
    if (p->height != condensed.height || p->width != condensed.width) {
      throw DimensionError("coarser feature does not match stage " + std::to_string(stage) + " resolution");
    }
  }
  Tensor input = concat_channels(parts);
  Tensor conv_pre = run_conv(params, stage_layer(stage), input, conv_tape);
  Tensor f = activate(conv_pre, activation_);
  // Additive skip from the adjacent coarser stage: up2(F_{s-1}).
  if (stage > 1) add_inplace(f, upsampled.back());
  if (pre) *pre = std::move(conv_pre);
  return f;
}

Tensor LightFpnDecoder::reconstruct_feature(const ParameterSet& params, int stage, std::span<const Tensor> deeper,
                                            const Tensor& condensed) const {
  return stage_forward(params, stage, deeper, condensed, nullptr, nullptr);
}

Tensor LightFpnDecoder::residual_head(const ParameterSet& params, int stage, const Tensor& feature) const {
  return run_conv(params, head_layer(stage), feature, nullptr);
}

PredictionPyramid LightFpnDecoder::decode(const ParameterSet& params, const FeaturePyramid& pyramid,
                                          DecoderTape* tape) const {
  CondensedPyramid local;
  CondensedPyramid& condensed = tape ? tape->condensed : local;
  for (int i = 0; i < 4; ++i) {
    condensed.levels[i] = run_conv(params, condense_layer(i), pyramid.levels[i], tape ? &tape->condense[i] : nullptr);
  }

  std::array<Tensor, 4> features;
  PredictionPyramid out;
  for (int s = 1; s <= kStages; ++s) {
    const Tensor& p_prime = condensed.levels[4 - s];
    features[s - 1] = stage_forward(params, s, std::span<const Tensor>(features.data(), s - 1), p_prime,
                                    tape ? &tape->stage_conv[s - 1] : nullptr,
                                    tape ? &tape->stage_pre[s - 1] : nullptr);
    out.residuals[s - 1] = run_conv(params, head_layer(s), features[s - 1], tape ? &tape->head[s - 1] : nullptr);
    if (s == 1) {
      out.stage_logits[0] = out.residuals[0];
    } else {
      out.stage_logits[s - 1] = out.residuals[s - 1];
      add_inplace(out.stage_logits[s - 1], upsample_bilinear(out.stage_logits[s - 2], 2));
    }
  }
  out.final_logits = upsample_bilinear(out.stage_logits[3], stage_stride(kStages));
  if (tape) tape->features = std::move(features);
  return out;
}

FeaturePyramid LightFpnDecoder::backward(const ParameterSet& params, const DecoderTape& tape,
                                         const PredictionGradients& grad, Gradients& grads) const {
  // Logit path: Cls_s = delta_s + up2(Cls_{s-1}); y_hat = up4(Cls_4).
  std::array<Tensor, 4> g_cls;
  for (int s = 0; s < 4; ++s) g_cls[s] = grad.stage_logits[s];
  if (grad.final_logits.size() != 0) {
    accumulate(g_cls[3], upsample_bilinear_backward(grad.final_logits, stage_stride(kStages)));
  }
  for (int s = kStages; s >= 2; --s) {
    if (g_cls[s - 1].size() != 0) accumulate(g_cls[s - 2], upsample_bilinear_backward(g_cls[s - 1], 2));
  }

  std::array<Tensor, 4> g_feat;
  FeaturePyramid g_pyramid;
  for (int s = kStages; s >= 1; --s) {
    const Tensor& f = tape.features[s - 1];
    Tensor g_delta = g_cls[s - 1];
    if (g_delta.size() == 0) g_delta = Tensor(1, f.height, f.width);
    accumulate(g_feat[s - 1], run_conv_backward(params, head_layer(s), tape.head[s - 1], g_delta, grads));

    const Tensor& g_f = g_feat[s - 1];
    if (s >= 2) accumulate(g_feat[s - 2], upsample_bilinear_backward(g_f, 2));
    Tensor g_pre = activate_backward(g_f, tape.stage_pre[s - 1], activation_);
    Tensor g_in = run_conv_backward(params, stage_layer(s), tape.stage_conv[s - 1], g_pre, grads);

    const std::size_t plane = g_in.plane();
    for (int j = 0; j < s; ++j) {
      Tensor chunk(width_, g_in.height, g_in.width);
      std::copy_n(g_in.data.begin() + static_cast<std::ptrdiff_t>(j) * width_ * plane, width_ * plane,
                  chunk.data.begin());
      if (j < s - 1) {
        accumulate(g_feat[j], upsample_bilinear_backward(chunk, 1 << (s - 1 - j)));
      } else {
        const int level = 4 - s;
        g_pyramid.levels[level] =
            run_conv_backward(params, condense_layer(level), tape.condense[level], chunk, grads);
      }
    }
  }
  return g_pyramid;
}

// ---------------------------------------------------------------------------
// Model

namespace {

ModelConfig validated(ModelConfig config) {
  config.validate();
  return config;
}

}  // namespace

Model::Model(ModelConfig config)
    : config_(validated(config)),
      encoder_(config_, params_),
      decoder_(config_.profile(), config_.decoder_width, config_.activation, params_) {
  std::mt19937_64 rng(config_.seed);
  auto init = [&](const ConvLayer& layer) {
    const int fan_in = layer.spec.in_channels * layer.spec.kernel * layer.spec.kernel;
    const double bound = layer.init_gain / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : params_[layer.weight].values) w = dist(rng);
  };
  for (const auto& layer : encoder_.layers()) init(layer);
  for (const auto& layer : decoder_.layers()) init(layer);
}

Model::Model(ModelConfig config, const ParameterSet& params) : Model(config) {
  if (params.size() != params_.size()) {
    throw ConfigError("parameter set has " + std::to_string(params.size()) + " arrays, model expects " +
                      std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params[i].name != params_[i].name || params[i].shape != params_[i].shape) {
      throw ConfigError("parameter '" + params[i].name + "' does not match model layout (expected '" +
                        params_[i].name + "')");
    }
  }
  params_ = params;
}

FeaturePyramid Model::encode(const Tensor& image) const {
  require_input_shape(image, config_.input_channels);
  return encoder_.forward(params_, image);
}

PredictionPyramid Model::forward(const Tensor& image, ForwardTape* tape) const {
  require_input_shape(image, config_.input_channels);
  if (!tape) return decoder_.decode(params_, encoder_.forward(params_, image));
  tape->features = encoder_.forward(params_, image, &tape->encoder);
  return decoder_.decode(params_, tape->features, &tape->decoder);
}

Gradients Model::backward(const ForwardTape& tape, const PredictionGradients& grad) const {
  Gradients grads = Gradients::zeros_like(params_);
  FeaturePyramid g_features = decoder_.backward(params_, tape.decoder, grad, grads);
  encoder_.backward(params_, tape.encoder, std::move(g_features), grads);
  return grads;
}

std::size_t Model::decoder_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.name.starts_with("decoder.")) n += p.values.size();
  }
  return n;
}

}  // namespace bfseg
