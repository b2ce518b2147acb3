// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <vector>

#include "gxl/autodiff.hpp"

namespace gxl {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by parameter order,
// which is fixed by the owning ParamStore.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  // Applies one update using each parameter's current grad slot.
  void step();

  int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Parameter*>& params() const { return params_; }

  // Serialization access (checkpoints).
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void set_step_count(int64_t n) { step_count_ = n; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  int64_t step_count_ = 0;
};

}  // namespace gxl
