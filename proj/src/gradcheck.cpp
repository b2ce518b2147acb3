// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gxl/error.hpp"
#include "gxl/rng.hpp"

namespace gxl {

GradCheckReport finite_diff_grad_check(const std::function<double(bool)>& loss_fn,
                                       const std::vector<Parameter*>& params,
                                       const GradCheckOptions& opts) {
  if (opts.epsilon <= 0.0) throw UsageError("grad check: epsilon must be positive");

  for (Parameter* p : params) p->zero_grad();
  loss_fn(true);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  // Pick coordinates: all of each tensor up to the per-tensor cap, then an
  // optional seeded global subsample.
  Rng rng(mix_seed(opts.seed, 0x67636b /* "gck" */));
  std::vector<std::pair<size_t, int64_t>> coords;
  for (size_t t = 0; t < params.size(); ++t) {
    const int64_t n = params[t]->value.size();
    if (opts.max_per_tensor <= 0 || n <= opts.max_per_tensor) {
      for (int64_t i = 0; i < n; ++i) coords.emplace_back(t, i);
    } else {
      std::vector<int64_t> idx(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
      rng.shuffle(idx);
      for (int64_t i = 0; i < opts.max_per_tensor; ++i) coords.emplace_back(t, idx[static_cast<size_t>(i)]);
    }
  }
  if (opts.max_total > 0 && static_cast<int64_t>(coords.size()) > opts.max_total) {
    rng.shuffle(coords);
    coords.resize(static_cast<size_t>(opts.max_total));
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  for (const auto& [t, i] : coords) {
    Parameter& p = *params[t];
    const double original = p.value[i];
    p.value[i] = original + opts.epsilon;
    const double up = loss_fn(false);
    p.value[i] = original - opts.epsilon;
    const double down = loss_fn(false);
    p.value[i] = original;
    const double numeric = (up - down) / (2.0 * opts.epsilon);
    const double exact = analytic[t][i];
    const double denom = std::max({std::abs(numeric), std::abs(exact), opts.denom_floor});
    const double rel = std::abs(numeric - exact) / denom;
    ++report.coords_checked;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = p.name;
      report.worst_index = i;
      report.worst_analytic = exact;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

std::string format_report(const GradCheckReport& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << ": max relative error " << r.max_rel_error << " over "
     << r.coords_checked << " coordinates (tolerance " << r.tolerance << ")";
  if (!r.worst_param.empty()) {
    os << "; worst at " << r.worst_param << "[" << r.worst_index << "] analytic "
       << r.worst_analytic << " vs numeric " << r.worst_numeric;
  }
  return os.str();
}

}  // namespace gxl
