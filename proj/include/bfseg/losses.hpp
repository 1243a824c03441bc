#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "bfseg/label_pyramid.hpp"
#include "bfseg/model.hpp"
#include "bfseg/tensor.hpp"

namespace bfseg {

enum class DeepSupervision { off, conventional, lenient };
enum class Distillation { off, lenient };

struct SupervisionMode {
  DeepSupervision deep = DeepSupervision::lenient;
  Distillation distill = Distillation::lenient;

  /// Distillation needs auxiliary heads under supervision.
  void validate() const;

  friend bool operator==(const SupervisionMode&, const SupervisionMode&) = default;
};

DeepSupervision parse_deep_supervision(std::string_view name);  // none | ori | lenient
Distillation parse_distillation(std::string_view name);         // off | on
std::string_view to_string(DeepSupervision d);
std::string_view to_string(Distillation d);

/// Per-scale arrays are ordered by stride like kStrides (4, 8, 16, 32).
struct LossBreakdown {
  double final_ce = 0.0;
  std::array<double, 4> lenient_per_scale{};
  std::array<double, 4> distill_per_scale{};
  double total = 0.0;
};

/// Sum in a fixed order: final_ce, lenient (stride 4..32), distill (stride 4..32).
double sum_terms(const LossBreakdown& b);

/// Numerically stable binary cross-entropy with logits for one pixel.
double bce_with_logits(double logit, double target);
double sigmoid(double z);

/// Mean BCE over pixels with m = 1, normalised by sum(m); 0 when sum(m) = 0.
/// If `grad` is non-null it receives dL/dlogits (exactly 0 at masked pixels).
double masked_bce(const Tensor& logits, const Tensor& targets, const PurityMask& mask, Tensor* grad = nullptr);

/// Unmasked mean BCE of full-resolution logits against a binary label.
double final_prediction_loss(const Tensor& logits, const LabelRaster& y, Tensor* grad = nullptr);

/// Deep supervision terms per stride. `grads` (stage-ordered, like PredictionPyramid) is accumulated into.
std::array<double, 4> lenient_supervision_loss(const PredictionPyramid& preds, const MaskPyramid& masks,
                                               DeepSupervision mode, PredictionGradients* grads = nullptr);

/// Stop-gradient soft teacher: block average of sigmoid(final logits) to `stride`.
Tensor distillation_teacher(const Tensor& final_logits, int stride);

/// Stage-ordered teachers for every decoder stride.
std::array<Tensor, 4> distillation_teachers(const Tensor& final_logits);

/// Self-distillation terms per stride. Teachers default to those derived from
/// `preds.final_logits`; passing them explicitly freezes the teacher.
std::array<double, 4> lenient_distillation_loss(const PredictionPyramid& preds, const MaskPyramid& masks,
                                                PredictionGradients* grads = nullptr,
                                                const std::array<Tensor, 4>* teachers = nullptr);

/// Full objective: final CE + deep supervision + distillation.
LossBreakdown total_loss(const PredictionPyramid& preds, const MaskPyramid& masks, const LabelRaster& y,
                         const SupervisionMode& mode, PredictionGradients* grads = nullptr,
                         const std::array<Tensor, 4>* teachers = nullptr);

}  // namespace bfseg
