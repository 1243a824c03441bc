#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bfseg/model.hpp"

namespace bfseg {

struct LayerCost {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t mult_adds = 0;  // convolution multiply-accumulates only
};

struct ComplexityReport {
  std::string decoder;
  int input_size = 0;
  std::vector<LayerCost> layers;

  std::uint64_t total_params() const;
  std::uint64_t total_mult_adds() const;
};

/// Condensers, dense stage convolutions and residual heads of the LightFPN decoder.
ComplexityReport count_lightfpn(const ChannelProfile& profile, int width, int input_size);

/// Reference U-Net decoder: three merge steps (upsample deeper, concat skip, two 3x3
/// convs with the skip's channel count) and a 1x1 single-channel head.
ComplexityReport count_unet_reference(const ChannelProfile& profile, int input_size);

struct VerificationReport {
  bool matches = true;
  std::vector<std::string> differences;  // one line per mismatching layer
};

/// Compares per-layer analytic parameter counts against instantiated counts keyed by layer name.
VerificationReport compare_counts(const ComplexityReport& analytic, const std::map<std::string, std::uint64_t>& actual);

/// Per-layer scalar counts of a model's decoder, keyed like the analytic report.
std::map<std::string, std::uint64_t> decoder_layer_counts(const Model& model);

VerificationReport verify_against_model(const Model& model);

/// Plain-text table: name, params, MFLOPs (mult-adds), totals.
std::string format_complexity(const ComplexityReport& r);

}  // namespace bfseg
