// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gxl/corpus.hpp"

namespace gxl {

using ConfusionMatrix = std::array<std::array<int64_t, kNumEmotions>, kNumEmotions>;

// Per-class and aggregate metrics over the 4-class domain.
//
// weighted_accuracy is support-weighted recall, which algebraically equals
// micro accuracy; balanced_accuracy (unweighted mean recall over present
// classes) is also reported since the literature uses "weighted accuracy"
// for both.
struct MetricsReport {
  ConfusionMatrix confusion{};  // [gold][pred]; row sums are class supports
  std::array<int64_t, kNumEmotions> support{};
  std::array<double, kNumEmotions> per_class_recall{};  // = per-class accuracy
  std::array<double, kNumEmotions> per_class_precision{};
  std::array<double, kNumEmotions> per_class_f1{};
  double weighted_accuracy = 0.0;
  double weighted_f1 = 0.0;
  double balanced_accuracy = 0.0;
  double micro_accuracy = 0.0;
  std::vector<std::string> warnings;  // e.g. class absent from the corpus

  int64_t total() const;
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion);
MetricsReport compute_metrics(std::span<const EmotionLabel> gold,
                              std::span<const EmotionLabel> predicted);

void write_metrics_csv(const MetricsReport& report, const std::string& path);
void write_confusion_csv(const ConfusionMatrix& confusion, const std::string& path);

}  // namespace gxl
