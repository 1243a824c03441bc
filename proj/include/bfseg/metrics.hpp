#pragma once

#include <cstdint>
#include <string>

#include "bfseg/tensor.hpp"

namespace bfseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Fractions in [0,1]. A metric whose denominator is zero is reported as 0 with its
/// `*_defined` flag cleared.
struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
  bool iou_defined = true;

  bool all_defined() const { return precision_defined && recall_defined && f1_defined && iou_defined; }
};

/// 1 where logit >= 0 (sigmoid >= 0.5; ties go to building).
LabelRaster binarize(const Tensor& logits);

ConfusionCounts accumulate(const LabelRaster& pred, const LabelRaster& truth, ConfusionCounts acc = {});

MetricsReport compute_metrics(const ConfusionCounts& c);

/// "iou=..\nprecision=..\nrecall=..\nf1=..\n" as percentages with two decimals;
/// undefined metrics carry a trailing " (undefined)".
std::string format_report(const MetricsReport& r);

}  // namespace bfseg
