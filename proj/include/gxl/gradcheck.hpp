// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gxl/autodiff.hpp"

namespace gxl {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Per-tensor coordinate cap; coordinates beyond the cap are subsampled
  // with a seeded picker.
  int64_t max_per_tensor = 64;
  // Optional global cap across all tensors (0 = unlimited).
  int64_t max_total = 0;
  uint64_t seed = 0;
  // Relative error denominators are floored here so near-zero gradients do
  // not blow up the ratio.
  double denom_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int64_t coords_checked = 0;
  bool passed = false;
  double tolerance = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central-difference verification of analytic gradients.
//
// loss_fn(true) must run forward + backward, accumulating gradients into
// the parameters' grad slots (which this function zeroes first), and return
// the loss. loss_fn(false) must run the same forward only. loss_fn must be
// a pure function of the parameter values.
GradCheckReport finite_diff_grad_check(const std::function<double(bool with_grad)>& loss_fn,
                                       const std::vector<Parameter*>& params,
                                       const GradCheckOptions& opts = {});

std::string format_report(const GradCheckReport& report);

}  // namespace gxl
