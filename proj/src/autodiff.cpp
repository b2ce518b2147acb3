// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/autodiff.hpp"

#include <cmath>
#include <utility>

#include "gxl/error.hpp"

namespace gxl {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

const Tensor& Var::value() const { return tape_->value_of(id_); }
const Tensor& Var::grad() const { return tape_->grad_of(id_); }

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }

Var Tape::make(const char* op, Tensor value, std::vector<int> parents, BackFn back) {
  if (check_finite_ && !value.all_finite()) {
    throw NumericError(std::string("non-finite values in output of ") + op);
  }
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.op = op;
  for (int p : n.parents) {
    if (node(p).needs_grad) {
      n.needs_grad = true;
      break;
    }
  }
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Tensor v) {
  Node n;
  n.value = std::move(v);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Parameter& p) {
  auto it = leaf_cache_.find(&p);
  if (it != leaf_cache_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.op = "leaf";
  n.needs_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  leaf_cache_.emplace(&p, id);
  return Var(this, id);
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = node(id);
  if (!n.needs_grad) return;
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  for (int64_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

Tensor Tape::reduce_to(const Tensor& g, const Shape& shape) {
  if (g.shape() == shape) return g;
  Tensor out(shape);
  int64_t gr = g.rows(), gc = g.cols();
  int64_t orows = shape[0], ocols = shape[1];
  for (int64_t i = 0; i < gr; ++i) {
    for (int64_t j = 0; j < gc; ++j) {
      out.at(orows == 1 ? 0 : i, ocols == 1 ? 0 : j) += g.at(i, j);
    }
  }
  return out;
}

void Tape::check_broadcastable(const Tensor& a, const Tensor& b, const char* op) {
  bool ok = a.shape().size() == 2 && b.shape().size() == 2 &&
            (a.rows() == b.rows() || a.rows() == 1 || b.rows() == 1) &&
            (a.cols() == b.cols() || a.cols() == 1 || b.cols() == 1);
  if (!ok) {
    throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " do not broadcast");
  }
}

namespace {

template <typename F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, F&& f) {
  int64_t m = std::max(a.rows(), b.rows());
  int64_t n = std::max(a.cols(), b.cols());
  Tensor out({m, n});
  const int64_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  for (int64_t i = 0; i < m; ++i) {
    const double* pa = a.data() + (ar == 1 ? 0 : i) * ac;
    const double* pb = b.data() + (br == 1 ? 0 : i) * bc;
    double* po = out.data() + i * n;
    for (int64_t j = 0; j < n; ++j) {
      po[j] = f(pa[ac == 1 ? 0 : j], pb[bc == 1 ? 0 : j]);
    }
  }
  return out;
}

// Gradient of a broadcast binary op w.r.t. one operand: weight the upstream
// gradient elementwise, then reduce over broadcast dims.
template <typename F>
Tensor broadcast_grad(const Tensor& g, const Tensor& a, const Tensor& b, const Shape& target,
                      F&& weight) {
  Tensor full = broadcast_apply(a, b, weight);
  for (int64_t i = 0; i < full.size(); ++i) full[i] *= g[i];
  return Tape::reduce_to(full, target);
}

}  // namespace

Var Tape::add(Var a, Var b) {
  check_broadcastable(a.value(), b.value(), "add");
  Tensor out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x + y; });
  int pa = a.id(), pb = b.id();
  return make("add", std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    t.accumulate(pa, reduce_to(g, t.value_of(pa).shape()));
    t.accumulate(pb, reduce_to(g, t.value_of(pb).shape()));
  });
}

Var Tape::sub(Var a, Var b) {
  check_broadcastable(a.value(), b.value(), "sub");
  Tensor out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x - y; });
  int pa = a.id(), pb = b.id();
  return make("sub", std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    t.accumulate(pa, reduce_to(g, t.value_of(pa).shape()));
    Tensor gb = reduce_to(g, t.value_of(pb).shape());
    for (int64_t i = 0; i < gb.size(); ++i) gb[i] = -gb[i];
    t.accumulate(pb, gb);
  });
}

Var Tape::mul(Var a, Var b) {
  check_broadcastable(a.value(), b.value(), "mul");
  Tensor out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x * y; });
  int pa = a.id(), pb = b.id();
  return make("mul", std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av = t.value_of(pa);
    const Tensor& bv = t.value_of(pb);
    t.accumulate(pa, broadcast_grad(g, av, bv, av.shape(), [](double, double y) { return y; }));
    t.accumulate(pb, broadcast_grad(g, av, bv, bv.shape(), [](double x, double) { return x; }));
  });
}

Var Tape::div(Var a, Var b) {
  check_broadcastable(a.value(), b.value(), "div");
  Tensor out = broadcast_apply(a.value(), b.value(), [](double x, double y) { return x / y; });
  int pa = a.id(), pb = b.id();
  return make("div", std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av = t.value_of(pa);
    const Tensor& bv = t.value_of(pb);
    t.accumulate(pa, broadcast_grad(g, av, bv, av.shape(), [](double, double y) { return 1.0 / y; }));
    t.accumulate(pb, broadcast_grad(g, av, bv, bv.shape(),
                                    [](double x, double y) { return -x / (y * y); }));
  });
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double c) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= c;
  int pa = a.id();
  return make("scale", std::move(out), {pa}, [pa, c](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga = g;
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] *= c;
    t.accumulate(pa, ga);
  });
}

Var Tape::add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] += c;
  int pa = a.id();
  return make("add_scalar", std::move(out), {pa},
              [pa](Tape& t, int self) { t.accumulate(pa, t.grad_of(self)); });
}

// Elementwise unary ops: FWD_EXPR in terms of x, BWD_EXPR (the local
// derivative) in terms of x and the forward output y.
#define GXL_UNARY_OP(NAME, FWD_EXPR, BWD_EXPR)                                \
  Var Tape::NAME(Var a) {                                                     \
    const Tensor& av = a.value();                                             \
    Tensor out(av.shape());                                                   \
    for (int64_t i = 0; i < av.size(); ++i) {                                 \
      double x = av[i];                                                       \
      (void)x;                                                                \
      out[i] = (FWD_EXPR);                                                    \
    }                                                                         \
    int pa = a.id();                                                          \
    return make(#NAME, std::move(out), {pa}, [pa](Tape& t, int self) {        \
      const Tensor& g = t.grad_of(self);                                      \
      const Tensor& av2 = t.value_of(pa);                                     \
      const Tensor& ov = t.value_of(self);                                    \
      (void)ov;                                                               \
      Tensor ga(av2.shape());                                                 \
      for (int64_t i = 0; i < ga.size(); ++i) {                               \
        double x = av2[i];                                                    \
        double y = ov[i];                                                     \
        (void)x;                                                              \
        (void)y;                                                              \
        ga[i] = g[i] * (BWD_EXPR);                                            \
      }                                                                       \
      t.accumulate(pa, ga);                                                   \
    });                                                                       \
  }

GXL_UNARY_OP(sigmoid, stable_sigmoid(x), y * (1.0 - y))
GXL_UNARY_OP(log_sigmoid, stable_log_sigmoid(x), stable_sigmoid(-x))
GXL_UNARY_OP(tanh, std::tanh(x), 1.0 - y * y)
GXL_UNARY_OP(exp, std::exp(x), y)
GXL_UNARY_OP(log, std::log(x), 1.0 / x)
GXL_UNARY_OP(sqrt, std::sqrt(x), 0.5 / y)
GXL_UNARY_OP(gelu, 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)),
             0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
                 x * kInvSqrt2Pi * std::exp(-0.5 * x * x))

#undef GXL_UNARY_OP

Var Tape::pow_scalar(Var a, double p) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.size(); ++i) out[i] = std::pow(av[i], p);
  int pa = a.id();
  return make("pow_scalar", std::move(out), {pa}, [pa, p](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av2 = t.value_of(pa);
    Tensor ga(av2.shape());
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] = g[i] * p * std::pow(av2[i], p - 1.0);
    t.accumulate(pa, ga);
  });
}

Var Tape::clamp_min(Var a, double floor) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.size(); ++i) out[i] = av[i] > floor ? av[i] : floor;
  int pa = a.id();
  return make("clamp_min", std::move(out), {pa}, [pa, floor](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av2 = t.value_of(pa);
    Tensor ga(av2.shape());
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] = av2[i] > floor ? g[i] : 0.0;
    t.accumulate(pa, ga);
  });
}

Var Tape::maximum(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw DimensionError("maximum: shapes " + shape_to_string(av.shape()) + " and " +
                         shape_to_string(bv.shape()) + " differ");
  }
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.size(); ++i) out[i] = av[i] >= bv[i] ? av[i] : bv[i];
  int pa = a.id(), pb = b.id();
  return make("maximum", std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av2 = t.value_of(pa);
    const Tensor& bv2 = t.value_of(pb);
    Tensor ga(av2.shape()), gb(bv2.shape());
    for (int64_t i = 0; i < g.size(); ++i) {
      if (av2[i] >= bv2[i]) {
        ga[i] = g[i];
      } else {
        gb[i] = g[i];
      }
    }
    t.accumulate(pa, ga);
    t.accumulate(pb, gb);
  });
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner extents differ, " + shape_to_string(av.shape()) + " x " +
                         shape_to_string(bv.shape()));
  }
  const int64_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = av.data() + i * k;
    double* orow = out.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double s = arow[p];
      if (s == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  int pa = a.id(), pb = b.id();
  return make("matmul", std::move(out), {pa, pb}, [pa, pb, m, k, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av2 = t.value_of(pa);
    const Tensor& bv2 = t.value_of(pb);
    // dA = g . B^T
    Tensor ga({m, k});
    for (int64_t i = 0; i < m; ++i) {
      const double* grow = g.data() + i * n;
      double* garow = ga.data() + i * k;
      for (int64_t p = 0; p < k; ++p) {
        const double* brow = bv2.data() + p * n;
        double acc = 0.0;
        for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
        garow[p] = acc;
      }
    }
    // dB = A^T . g
    Tensor gb({k, n});
    for (int64_t i = 0; i < m; ++i) {
      const double* arow = av2.data() + i * k;
      const double* grow = g.data() + i * n;
      for (int64_t p = 0; p < k; ++p) {
        const double s = arow[p];
        if (s == 0.0) continue;
        double* gbrow = gb.data() + p * n;
        for (int64_t j = 0; j < n; ++j) gbrow[j] += s * grow[j];
      }
    }
    t.accumulate(pa, ga);
    t.accumulate(pb, gb);
  });
}

Var Tape::transpose(Var a) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  int pa = a.id();
  return make("transpose", std::move(out), {pa}, [pa, m, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga({m, n});
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) ga.at(i, j) = g.at(j, i);
    t.accumulate(pa, ga);
  });
}

Var Tape::reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(shape);
  int pa = a.id();
  return make("reshape", std::move(out), {pa}, [pa](Tape& t, int self) {
    t.accumulate(pa, t.grad_of(self).reshaped(t.value_of(pa).shape()));
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no parts");
  const int64_t m = parts[0].rows();
  int64_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    total += p.cols();
  }
  Tensor out({m, total});
  std::vector<int> ids;
  std::vector<int64_t> widths;
  int64_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const int64_t w = pv.cols();
    for (int64_t i = 0; i < m; ++i) {
      const double* src = pv.data() + i * w;
      double* dst = out.data() + i * total + off;
      for (int64_t j = 0; j < w; ++j) dst[j] = src[j];
    }
    ids.push_back(p.id());
    widths.push_back(w);
    off += w;
  }
  return make("concat_cols", std::move(out), ids,
              [ids, widths, m, total](Tape& t, int self) {
                const Tensor& g = t.grad_of(self);
                int64_t off2 = 0;
                for (size_t s = 0; s < ids.size(); ++s) {
                  const int64_t w = widths[s];
                  Tensor gp({m, w});
                  for (int64_t i = 0; i < m; ++i) {
                    const double* src = g.data() + i * total + off2;
                    double* dst = gp.data() + i * w;
                    for (int64_t j = 0; j < w; ++j) dst[j] = src[j];
                  }
                  t.accumulate(ids[s], gp);
                  off2 += w;
                }
              });
}

Var Tape::slice_cols(Var a, int64_t start, int64_t len) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  if (start < 0 || len < 0 || start + len > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of " + std::to_string(n));
  }
  Tensor out({m, len});
  for (int64_t i = 0; i < m; ++i) {
    const double* src = av.data() + i * n + start;
    double* dst = out.data() + i * len;
    for (int64_t j = 0; j < len; ++j) dst[j] = src[j];
  }
  int pa = a.id();
  return make("slice_cols", std::move(out), {pa}, [pa, start, len, m, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga({m, n});
    for (int64_t i = 0; i < m; ++i) {
      const double* src = g.data() + i * len;
      double* dst = ga.data() + i * n + start;
      for (int64_t j = 0; j < len; ++j) dst[j] = src[j];
    }
    t.accumulate(pa, ga);
  });
}

Var Tape::slice_rows(Var a, int64_t start, int64_t len) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  if (start < 0 || len < 0 || start + len > m) {
    throw DimensionError("slice_rows: range [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of " + std::to_string(m));
  }
  Tensor out({len, n});
  for (int64_t i = 0; i < len; ++i)
    for (int64_t j = 0; j < n; ++j) out.at(i, j) = av.at(start + i, j);
  int pa = a.id();
  return make("slice_rows", std::move(out), {pa}, [pa, start, len, m, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga({m, n});
    for (int64_t i = 0; i < len; ++i)
      for (int64_t j = 0; j < n; ++j) ga.at(start + i, j) = g.at(i, j);
    t.accumulate(pa, ga);
  });
}

Var Tape::tile_cols_grouped(Var a, int64_t group, int64_t repeat) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  if (group <= 0 || repeat <= 0 || n % group != 0) {
    throw DimensionError("tile_cols_grouped: cols " + std::to_string(n) +
                         " not divisible into groups of " + std::to_string(group));
  }
  const int64_t ngroups = n / group;
  const int64_t ocols = n * repeat;
  Tensor out({m, ocols});
  for (int64_t i = 0; i < m; ++i) {
    const double* src = av.data() + i * n;
    double* dst = out.data() + i * ocols;
    for (int64_t gi = 0; gi < ngroups; ++gi) {
      for (int64_t r = 0; r < repeat; ++r) {
        for (int64_t j = 0; j < group; ++j) {
          dst[(gi * repeat + r) * group + j] = src[gi * group + j];
        }
      }
    }
  }
  int pa = a.id();
  return make("tile_cols_grouped", std::move(out), {pa},
              [pa, group, repeat, m, n, ngroups, ocols](Tape& t, int self) {
                const Tensor& g = t.grad_of(self);
                Tensor ga({m, n});
                for (int64_t i = 0; i < m; ++i) {
                  const double* src = g.data() + i * ocols;
                  double* dst = ga.data() + i * n;
                  for (int64_t gi = 0; gi < ngroups; ++gi) {
                    for (int64_t r = 0; r < repeat; ++r) {
                      for (int64_t j = 0; j < group; ++j) {
                        dst[gi * group + j] += src[(gi * repeat + r) * group + j];
                      }
                    }
                  }
                }
                t.accumulate(pa, ga);
              });
}

Var Tape::sum_cols_grouped(Var a, int64_t group) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  if (group <= 0 || n % group != 0) {
    throw DimensionError("sum_cols_grouped: cols " + std::to_string(n) +
                         " not divisible into groups of " + std::to_string(group));
  }
  const int64_t ngroups = n / group;
  Tensor out({m, ngroups});
  for (int64_t i = 0; i < m; ++i) {
    const double* src = av.data() + i * n;
    double* dst = out.data() + i * ngroups;
    for (int64_t gi = 0; gi < ngroups; ++gi) {
      double acc = 0.0;
      for (int64_t j = 0; j < group; ++j) acc += src[gi * group + j];
      dst[gi] = acc;
    }
  }
  int pa = a.id();
  return make("sum_cols_grouped", std::move(out), {pa},
              [pa, group, m, n, ngroups](Tape& t, int self) {
                const Tensor& g = t.grad_of(self);
                Tensor ga({m, n});
                for (int64_t i = 0; i < m; ++i) {
                  const double* src = g.data() + i * ngroups;
                  double* dst = ga.data() + i * n;
                  for (int64_t gi = 0; gi < ngroups; ++gi) {
                    for (int64_t j = 0; j < group; ++j) dst[gi * group + j] = src[gi];
                  }
                }
                t.accumulate(pa, ga);
              });
}

Var Tape::sum(Var a) {
  const Tensor& av = a.value();
  double acc = 0.0;
  for (int64_t i = 0; i < av.size(); ++i) acc += av[i];
  int pa = a.id();
  return make("sum", Tensor::scalar(acc), {pa}, [pa](Tape& t, int self) {
    const double g = t.grad_of(self).item();
    t.accumulate(pa, Tensor::full(t.value_of(pa).shape(), g));
  });
}

Var Tape::mean(Var a) {
  const int64_t n = a.value().size();
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var Tape::row_sum(Var a) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  Tensor out({m, 1});
  for (int64_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* src = av.data() + i * n;
    for (int64_t j = 0; j < n; ++j) acc += src[j];
    out[i] = acc;
  }
  int pa = a.id();
  return make("row_sum", std::move(out), {pa}, [pa, m, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga({m, n});
    for (int64_t i = 0; i < m; ++i) {
      const double gi = g[i];
      double* dst = ga.data() + i * n;
      for (int64_t j = 0; j < n; ++j) dst[j] = gi;
    }
    t.accumulate(pa, ga);
  });
}

Var Tape::softmax(Var a) {
  const Tensor& av = a.value();
  const int64_t m = av.rows(), n = av.cols();
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const double* src = av.data() + i * n;
    double* dst = out.data() + i * n;
    double mx = src[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, src[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      dst[j] = std::exp(src[j] - mx);
      z += dst[j];
    }
    for (int64_t j = 0; j < n; ++j) dst[j] /= z;
  }
  int pa = a.id();
  return make("softmax", std::move(out), {pa}, [pa, m, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& s = t.value_of(self);
    Tensor ga({m, n});
    for (int64_t i = 0; i < m; ++i) {
      const double* gr = g.data() + i * n;
      const double* sr = s.data() + i * n;
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j) dot += gr[j] * sr[j];
      double* dst = ga.data() + i * n;
      for (int64_t j = 0; j < n; ++j) dst[j] = sr[j] * (gr[j] - dot);
    }
    t.accumulate(pa, ga);
  });
}

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
  const Tensor& lv = logits.value();
  const int64_t m = lv.rows(), n = lv.cols();
  if (static_cast<int64_t>(labels.size()) != m) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(m) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= n) {
      throw UsageError("softmax_cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(n) + ")");
    }
  }
  double total = 0.0;
  for (int64_t i = 0; i < m; ++i) {
    const double* src = lv.data() + i * n;
    double mx = src[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, src[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) z += std::exp(src[j] - mx);
    total += mx + std::log(z) - src[labels[static_cast<size_t>(i)]];
  }
  int pa = logits.id();
  std::vector<int> labels_copy = labels;
  return make("softmax_cross_entropy", Tensor::scalar(total / static_cast<double>(m)), {pa},
              [pa, m, n, labels_copy](Tape& t, int self) {
                const double g = t.grad_of(self).item();
                const Tensor& lv2 = t.value_of(pa);
                Tensor ga({m, n});
                for (int64_t i = 0; i < m; ++i) {
                  const double* src = lv2.data() + i * n;
                  double* dst = ga.data() + i * n;
                  double mx = src[0];
                  for (int64_t j = 1; j < n; ++j) mx = std::max(mx, src[j]);
                  double z = 0.0;
                  for (int64_t j = 0; j < n; ++j) {
                    dst[j] = std::exp(src[j] - mx);
                    z += dst[j];
                  }
                  const double inv = g / (z * static_cast<double>(m));
                  for (int64_t j = 0; j < n; ++j) dst[j] *= inv;
                  dst[labels_copy[static_cast<size_t>(i)]] -= g / static_cast<double>(m);
                }
                t.accumulate(pa, ga);
              });
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const int64_t n = a.cols();
  Var mu = scale(row_sum(a), 1.0 / static_cast<double>(n));
  Var centered = sub(a, mu);
  Var variance = scale(row_sum(mul(centered, centered)), 1.0 / static_cast<double>(n));
  Var inv = pow_scalar(add_scalar(variance, eps), -0.5);
  return add(mul(mul(centered, inv), gamma), beta);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("backward: loss from another tape");
  Node& ln = node(loss.id());
  if (ln.value.size() != 1) {
    throw UsageError("backward: loss must be scalar, got shape " +
                     shape_to_string(ln.value.shape()));
  }
  if (!ln.needs_grad) return;  // loss does not depend on any parameter
  ln.grad = Tensor::full(ln.value.shape(), 1.0);
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = node(i);
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.back) n.back(*this, i);
    if (n.param != nullptr) {
      for (int64_t j = 0; j < n.grad.size(); ++j) n.param->grad[j] += n.grad[j];
    }
  }
}

}  // namespace gxl
