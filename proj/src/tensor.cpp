// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/tensor.hpp"

#include <cmath>
#include <sstream>

#include "gxl/error.hpp"

namespace gxl {

namespace {
int64_t element_count(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw DimensionError("negative extent in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}
}  // namespace

std::string shape_to_string(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(element_count(shape_)), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != static_cast<int64_t>(data_.size())) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Shape s{1, static_cast<int64_t>(values.size())};
  return Tensor(std::move(s), std::move(values));
}

int64_t Tensor::rows() const {
  if (shape_.size() != 2) throw DimensionError("rows() on tensor of shape " + shape_to_string(shape_));
  return shape_[0];
}

int64_t Tensor::cols() const {
  if (shape_.size() != 2) throw DimensionError("cols() on tensor of shape " + shape_to_string(shape_));
  return shape_[1];
}

double& Tensor::at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }

double Tensor::at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != size()) {
    throw DimensionError("reshape " + shape_to_string(shape_) + " -> " + shape_to_string(shape) +
                         " changes element count");
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

}  // namespace gxl
