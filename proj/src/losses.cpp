#include "bfseg/losses.hpp"

#include <cmath>
#include <string>

#include "bfseg/errors.hpp"

namespace bfseg {
namespace {

// Stage index (0 = coarsest) for a stride-ordered slot.
int stage_index_for_slot(std::size_t slot) { return 3 - static_cast<int>(slot); }

void require_same_shape(const Tensor& logits, int h, int w, std::string_view what) {
  if (logits.channels != 1 || logits.height != h || logits.width != w) {
    throw DimensionError(std::string(what) + ": logits " + std::to_string(logits.height) + "x" +
                         std::to_string(logits.width) + " do not match " + std::to_string(h) + "x" +
                         std::to_string(w));
  }
}

void add_grad(Tensor& dst, const Tensor& src) {
  if (dst.size() == 0) {
    dst = src;
  } else {
    add_inplace(dst, src);
  }
}

Tensor rounded_targets(const SoftLabel& soft) {
  Tensor t(1, soft.height, soft.width);
  const auto area = soft.block_area();
  for (std::size_t i = 0; i < soft.size(); ++i) t.data[i] = 2 * soft.block_sums[i] >= area ? 1.0 : 0.0;
  return t;
}

}  // namespace

void SupervisionMode::validate() const {
  if (distill == Distillation::lenient && deep == DeepSupervision::off) {
    throw ConfigError("distillation requires deep supervision (mode ori or lenient)");
  }
}

DeepSupervision parse_deep_supervision(std::string_view name) {
  if (name == "none" || name == "off") return DeepSupervision::off;
  if (name == "ori" || name == "conventional") return DeepSupervision::conventional;
  if (name == "lenient") return DeepSupervision::lenient;
  throw ConfigError("unknown supervision mode '" + std::string(name) + "' (expected none, ori or lenient)");
}

Distillation parse_distillation(std::string_view name) {
  if (name == "off") return Distillation::off;
  if (name == "on" || name == "lenient") return Distillation::lenient;
  throw ConfigError("unknown distillation setting '" + std::string(name) + "' (expected off or on)");
}

std::string_view to_string(DeepSupervision d) {
  switch (d) {
    case DeepSupervision::off: return "none";
    case DeepSupervision::conventional: return "ori";
    case DeepSupervision::lenient: return "lenient";
  }
  return "none";
}

std::string_view to_string(Distillation d) { return d == Distillation::lenient ? "on" : "off"; }

double sum_terms(const LossBreakdown& b) {
  double total = b.final_ce;
  for (double v : b.lenient_per_scale) total += v;
  for (double v : b.distill_per_scale) total += v;
  return total;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logits(double logit, double target) {
  // max(z,0) - z*t + log(1 + exp(-|z|))
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::fabs(logit)));
}

double masked_bce(const Tensor& logits, const Tensor& targets, const PurityMask& mask, Tensor* grad) {
  require_same_shape(logits, mask.height, mask.width, "masked_bce");
  require_same_shape(targets, mask.height, mask.width, "masked_bce targets");
  std::size_t count = 0;
  for (auto m : mask.values) count += m != 0;
  if (grad) *grad = Tensor(1, logits.height, logits.width);
  if (count == 0) return 0.0;

  const double inv = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask.values[i] == 0) continue;
    sum += bce_with_logits(logits.data[i], targets.data[i]);
    if (grad) grad->data[i] = (sigmoid(logits.data[i]) - targets.data[i]) * inv;
  }
  return sum * inv;
}

double final_prediction_loss(const Tensor& logits, const LabelRaster& y, Tensor* grad) {
  require_binary(y);
  Tensor targets(1, y.height, y.width);
  for (std::size_t i = 0; i < y.size(); ++i) targets.data[i] = y.values[i];
  return masked_bce(logits, targets, PurityMask(y.height, y.width, 1), grad);
}

std::array<double, 4> lenient_supervision_loss(const PredictionPyramid& preds, const MaskPyramid& masks,
                                               DeepSupervision mode, PredictionGradients* grads) {
  std::array<double, 4> terms{};
  if (mode == DeepSupervision::off) return terms;
  for (std::size_t slot = 0; slot < kStrides.size(); ++slot) {
    const MaskLevel& level = masks.levels[slot];
    if (level.stride != kStrides[slot]) throw DimensionError("mask pyramid strides are out of order");
    const Tensor& logits = preds.logits_at_stride(level.stride);
    Tensor grad;
    if (mode == DeepSupervision::lenient) {
      terms[slot] = masked_bce(logits, level.soft.to_tensor(), level.mask, grads ? &grad : nullptr);
    } else {
      terms[slot] = masked_bce(logits, rounded_targets(level.soft), PurityMask(level.soft.height, level.soft.width, 1),
                               grads ? &grad : nullptr);
    }
    if (grads) add_grad(grads->stage_logits[stage_index_for_slot(slot)], grad);
  }
  return terms;
}

Tensor distillation_teacher(const Tensor& final_logits, int stride) {
  Tensor prob = final_logits;
  for (auto& v : prob.data) v = sigmoid(v);
  return block_average(prob, stride);
}

std::array<Tensor, 4> distillation_teachers(const Tensor& final_logits) {
  std::array<Tensor, 4> out;
  for (int s = 1; s <= kStages; ++s) out[s - 1] = distillation_teacher(final_logits, stage_stride(s));
  return out;
}

std::array<double, 4> lenient_distillation_loss(const PredictionPyramid& preds, const MaskPyramid& masks,
                                                PredictionGradients* grads, const std::array<Tensor, 4>* teachers) {
  if (preds.final_logits.size() == 0) throw DimensionError("distillation needs the final prediction");
  std::array<Tensor, 4> derived;
  if (!teachers) {
    derived = distillation_teachers(preds.final_logits);
    teachers = &derived;
  }
  std::array<double, 4> terms{};
  for (std::size_t slot = 0; slot < kStrides.size(); ++slot) {
    const MaskLevel& level = masks.levels[slot];
    const int stage = stage_index_for_slot(slot);
    Tensor grad;
    terms[slot] = masked_bce(preds.stage_logits[stage], (*teachers)[stage], level.mask, grads ? &grad : nullptr);
    if (grads) add_grad(grads->stage_logits[stage], grad);
  }
  return terms;
}

LossBreakdown total_loss(const PredictionPyramid& preds, const MaskPyramid& masks, const LabelRaster& y,
                         const SupervisionMode& mode, PredictionGradients* grads,
                         const std::array<Tensor, 4>* teachers) {
  mode.validate();
  LossBreakdown b;
  Tensor final_grad;
  b.final_ce = final_prediction_loss(preds.final_logits, y, grads ? &final_grad : nullptr);
  if (grads) add_grad(grads->final_logits, final_grad);
  b.lenient_per_scale = lenient_supervision_loss(preds, masks, mode.deep, grads);
  if (mode.distill == Distillation::lenient) b.distill_per_scale = lenient_distillation_loss(preds, masks, grads, teachers);
  b.total = sum_terms(b);
  return b;
}

}  // namespace bfseg
