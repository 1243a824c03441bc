#include "bfseg/complexity.hpp"

#include <fmt/format.h>

#include "bfseg/errors.hpp"
#include "bfseg/label_pyramid.hpp"

namespace bfseg {
namespace {

LayerCost conv_cost(std::string name, std::uint64_t in, std::uint64_t out, std::uint64_t kernel,
                    std::uint64_t positions) {
  const std::uint64_t weights = kernel * kernel * in * out;
  return LayerCost{std::move(name), weights + out, weights * positions};
}

std::uint64_t positions_at(int input_size, int stride) {
  const auto side = static_cast<std::uint64_t>(input_size / stride);
  return side * side;
}

void require_size(int input_size) {
  if (input_size <= 0 || input_size % kMaxStride != 0) {
    throw ConfigError("input size must be a positive multiple of 32");
  }
}

}  // namespace

std::uint64_t ComplexityReport::total_params() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.params;
  return n;
}

std::uint64_t ComplexityReport::total_mult_adds() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.mult_adds;
  return n;
}

ComplexityReport count_lightfpn(const ChannelProfile& profile, int width, int input_size) {
  validate_profile(profile);
  require_size(input_size);
  if (width < 1) throw ConfigError("decoder width must be >= 1");
  ComplexityReport r{"lightfpn", input_size, {}};
  const auto w = static_cast<std::uint64_t>(width);
  for (int i = 0; i < 4; ++i) {
    r.layers.push_back(conv_cost(fmt::format("condense_p{}", i + 3), profile[i], w, 1,
                                 positions_at(input_size, kStrides[i])));
  }
  for (int s = 1; s <= kStages; ++s) {
    r.layers.push_back(conv_cost(fmt::format("stage{}", s), w * s, w, 3, positions_at(input_size, stage_stride(s))));
  }
  for (int s = 1; s <= kStages; ++s) {
    r.layers.push_back(conv_cost(fmt::format("head{}", s), w, 1, 3, positions_at(input_size, stage_stride(s))));
  }
  return r;
}

ComplexityReport count_unet_reference(const ChannelProfile& profile, int input_size) {
  validate_profile(profile);
  require_size(input_size);
  ComplexityReport r{"unet_reference", input_size, {}};
  std::uint64_t deeper = profile[3];
  for (int level = 2; level >= 0; --level) {
    const std::uint64_t skip = profile[level];
    const auto positions = positions_at(input_size, kStrides[level]);
    r.layers.push_back(conv_cost(fmt::format("merge_p{}.conv1", level + 3), deeper + skip, skip, 3, positions));
    r.layers.push_back(conv_cost(fmt::format("merge_p{}.conv2", level + 3), skip, skip, 3, positions));
    deeper = skip;
  }
  r.layers.push_back(conv_cost("head", deeper, 1, 1, positions_at(input_size, kStrides[0])));
  return r;
}

VerificationReport compare_counts(const ComplexityReport& analytic, const std::map<std::string, std::uint64_t>& actual) {
  VerificationReport v;
  std::map<std::string, std::uint64_t> remaining = actual;
  for (const auto& layer : analytic.layers) {
    auto it = remaining.find(layer.name);
    if (it == remaining.end()) {
      v.differences.push_back(fmt::format("{}: analytic {} params, missing from model", layer.name, layer.params));
      continue;
    }
    if (it->second != layer.params) {
      v.differences.push_back(fmt::format("{}: analytic {} params, model has {}", layer.name, layer.params, it->second));
    }
    remaining.erase(it);
  }
  for (const auto& [name, count] : remaining) {
    v.differences.push_back(fmt::format("{}: model has {} params, no analytic entry", name, count));
  }
  v.matches = v.differences.empty();
  return v;
}

std::map<std::string, std::uint64_t> decoder_layer_counts(const Model& model) {
  std::map<std::string, std::uint64_t> out;
  constexpr std::string_view prefix = "decoder.";
  for (const auto& p : model.parameters()) {
    if (!p.name.starts_with(prefix)) continue;
    const auto dot = p.name.rfind('.');
    out[p.name.substr(prefix.size(), dot - prefix.size())] += p.values.size();
  }
  return out;
}

VerificationReport verify_against_model(const Model& model) {
  // Parameter counts do not depend on input size; 32 is the smallest legal size.
  const auto analytic = count_lightfpn(model.config().profile(), model.config().decoder_width, kMaxStride);
  return compare_counts(analytic, decoder_layer_counts(model));
}

std::string format_complexity(const ComplexityReport& r) {
  std::string out = fmt::format("# decoder={} input={}x{} flops=conv multiply-accumulates\n", r.decoder, r.input_size,
                                r.input_size);
  out += fmt::format("{:<20} {:>12} {:>12}\n", "name", "params", "MFLOPs");
  for (const auto& l : r.layers) {
    out += fmt::format("{:<20} {:>12} {:>12.3f}\n", l.name, l.params, l.mult_adds / 1e6);
  }
  out += fmt::format("{:<20} {:>12} {:>12.3f}\n", "total", r.total_params(), r.total_mult_adds() / 1e6);
  return out;
}

}  // namespace bfseg
