#include "bfseg/metrics.hpp"

#include <fmt/format.h>

#include "bfseg/errors.hpp"

namespace bfseg {
namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& defined) {
  defined = den != 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

LabelRaster binarize(const Tensor& logits) {
  if (logits.channels != 1) throw DimensionError("binarize expects single-channel logits");
  LabelRaster out(logits.height, logits.width);
  for (std::size_t i = 0; i < logits.size(); ++i) out.values[i] = logits.data[i] >= 0.0 ? 1 : 0;
  return out;
}

ConfusionCounts accumulate(const LabelRaster& pred, const LabelRaster& truth, ConfusionCounts acc) {
  if (!pred.same_shape(truth)) throw DimensionError("prediction and truth rasters differ in shape");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool t = truth.values[i] != 0;
    if (p && t) {
      ++acc.tp;
    } else if (!p && !t) {
      ++acc.tn;
    } else if (p) {
      ++acc.fp;
    } else {
      ++acc.fn;
    }
  }
  return acc;
}

MetricsReport compute_metrics(const ConfusionCounts& c) {
  MetricsReport r;
  r.precision = ratio(c.tp, c.tp + c.fp, r.precision_defined);
  r.recall = ratio(c.tp, c.tp + c.fn, r.recall_defined);
  r.iou = ratio(c.tp, c.tp + c.fp + c.fn, r.iou_defined);
  // 2PR/(P+R) == 2TP/(2TP+FP+FN) whenever both are defined; the count form is exact.
  r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, r.f1_defined);
  if (!r.precision_defined || !r.recall_defined) {
    r.f1 = 0.0;
    r.f1_defined = false;
  }
  return r;
}

std::string format_report(const MetricsReport& r) {
  auto line = [](std::string_view key, double v, bool defined) {
    return fmt::format("{}={:.2f}{}\n", key, 100.0 * v, defined ? "" : " (undefined)");
  };
  return line("iou", r.iou, r.iou_defined) + line("precision", r.precision, r.precision_defined) +
         line("recall", r.recall, r.recall_defined) + line("f1", r.f1, r.f1_defined);
}

}  // namespace bfseg
