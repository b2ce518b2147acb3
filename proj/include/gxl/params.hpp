// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "gxl/autodiff.hpp"
#include "gxl/rng.hpp"

namespace gxl {

// Owns a model's parameters in creation order. Creation order is the
// canonical iteration order for the optimizer, checkpoints and gradient
// checks, so it is deterministic across runs.
class ParamStore {
 public:
  Parameter* create(const std::string& name, Tensor init);
  Parameter* zeros(const std::string& name, Shape shape);
  Parameter* constant(const std::string& name, Shape shape, double v);
  Parameter* normal(const std::string& name, Shape shape, double stddev, Rng& rng);

  Parameter* find(const std::string& name) const;  // nullptr if absent
  Parameter& at(const std::string& name) const;    // throws UsageError

  std::vector<Parameter*> all() const;
  size_t size() const { return params_.size(); }
  int64_t total_elements() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

}  // namespace gxl
