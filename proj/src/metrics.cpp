// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "gxl/error.hpp"

namespace gxl {

int64_t MetricsReport::total() const {
  int64_t n = 0;
  for (int64_t s : support) n += s;
  return n;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion) {
  MetricsReport r;
  r.confusion = confusion;
  int64_t total = 0, diagonal = 0;
  std::array<int64_t, kNumEmotions> col_sum{};
  for (int g = 0; g < kNumEmotions; ++g) {
    for (int p = 0; p < kNumEmotions; ++p) {
      const int64_t n = confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
      r.support[static_cast<size_t>(g)] += n;
      col_sum[static_cast<size_t>(p)] += n;
      total += n;
      if (g == p) diagonal += n;
    }
  }
  if (total == 0) throw UsageError("metrics: empty confusion matrix");

  int present = 0;
  for (int c = 0; c < kNumEmotions; ++c) {
    const auto ci = static_cast<size_t>(c);
    const int64_t tp = confusion[ci][ci];
    const int64_t support = r.support[ci];
    const int64_t predicted = col_sum[ci];
    r.per_class_recall[ci] = support > 0 ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    r.per_class_precision[ci] =
        predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    const double pr = r.per_class_precision[ci] + r.per_class_recall[ci];
    r.per_class_f1[ci] = pr > 0.0 ? 2.0 * r.per_class_precision[ci] * r.per_class_recall[ci] / pr : 0.0;
    if (support > 0) {
      ++present;
      const double weight = static_cast<double>(support) / static_cast<double>(total);
      r.weighted_accuracy += weight * r.per_class_recall[ci];
      r.weighted_f1 += weight * r.per_class_f1[ci];
      r.balanced_accuracy += r.per_class_recall[ci];
    } else {
      r.warnings.push_back(std::string("class ") + to_string(label_from_index(c)) +
                           " absent from corpus; weighted with 0");
    }
  }
  r.balanced_accuracy /= static_cast<double>(present);
  r.micro_accuracy = static_cast<double>(diagonal) / static_cast<double>(total);
  return r;
}

MetricsReport compute_metrics(std::span<const EmotionLabel> gold,
                              std::span<const EmotionLabel> predicted) {
  if (gold.size() != predicted.size()) {
    throw UsageError("metrics: gold and prediction counts differ");
  }
  if (gold.empty()) throw UsageError("metrics: no predictions");
  ConfusionMatrix confusion{};
  for (size_t i = 0; i < gold.size(); ++i) {
    ++confusion[static_cast<size_t>(gold[i])][static_cast<size_t>(predicted[i])];
  }
  return metrics_from_confusion(confusion);
}

namespace {
std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12f", v);
  return buf;
}
}  // namespace

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "metric,value\n";
  os << "weighted_accuracy," << fmt(report.weighted_accuracy) << "\n";
  os << "weighted_f1," << fmt(report.weighted_f1) << "\n";
  os << "balanced_accuracy," << fmt(report.balanced_accuracy) << "\n";
  os << "micro_accuracy," << fmt(report.micro_accuracy) << "\n";
  for (int c = 0; c < kNumEmotions; ++c) {
    const char* name = to_string(label_from_index(c));
    const auto ci = static_cast<size_t>(c);
    os << name << "_accuracy," << fmt(report.per_class_recall[ci]) << "\n";
    os << name << "_f1," << fmt(report.per_class_f1[ci]) << "\n";
    os << name << "_support," << report.support[ci] << "\n";
  }
}

void write_confusion_csv(const ConfusionMatrix& confusion, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "gold\\pred";
  for (int p = 0; p < kNumEmotions; ++p) os << ',' << to_string(label_from_index(p));
  os << '\n';
  for (int g = 0; g < kNumEmotions; ++g) {
    os << to_string(label_from_index(g));
    for (int p = 0; p < kNumEmotions; ++p) {
      os << ',' << confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
    }
    os << '\n';
  }
}

}  // namespace gxl
