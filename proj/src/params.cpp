// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/params.hpp"

#include "gxl/error.hpp"

namespace gxl {

Parameter* ParamStore::create(const std::string& name, Tensor init) {
  if (by_name_.count(name)) throw UsageError("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  Parameter* p = params_.back().get();
  by_name_.emplace(name, p);
  return p;
}

Parameter* ParamStore::zeros(const std::string& name, Shape shape) {
  return create(name, Tensor::zeros(std::move(shape)));
}

Parameter* ParamStore::constant(const std::string& name, Shape shape, double v) {
  return create(name, Tensor::full(std::move(shape), v));
}

Parameter* ParamStore::normal(const std::string& name, Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
  return create(name, std::move(t));
}

Parameter* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

Parameter& ParamStore::at(const std::string& name) const {
  Parameter* p = find(name);
  if (!p) throw UsageError("unknown parameter: " + name);
  return *p;
}

std::vector<Parameter*> ParamStore::all() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (const auto& p : params_) p->zero_grad();
}

}  // namespace gxl
