#pragma once

// Differentiable operators. Every operator validates shapes explicitly:
// there is no broadcasting except tensor * scalar.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clasp/numerics/kernels.hpp"
#include "clasp/numerics/tape.hpp"

namespace clasp::numerics {

namespace detail {

inline void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

inline void require_rank(const char* op, const Shape& a, std::size_t rank) {
  if (a.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(a));
  }
}

template <typename T>
void require_same_tape(const Var<T>& a, const Var<T>& b) {
  if (a.tape() != b.tape()) throw ContractError("operands live on different tapes");
}

}  // namespace detail

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape("add", a.shape(), b.shape());
  BasicTensor<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return a.tape()->record(OpTag::add, std::move(out), {a.id(), b.id()},
                          [pa = a.id(), pb = b.id()](Tape<T>& t, std::size_t self) {
                            t.accumulate(pa, BasicTensor<T>(t.grad(self)));
                            t.accumulate(pb, BasicTensor<T>(t.grad(self)));
                          });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape("sub", a.shape(), b.shape());
  BasicTensor<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return a.tape()->record(OpTag::sub, std::move(out), {a.id(), b.id()},
                          [pa = a.id(), pb = b.id()](Tape<T>& t, std::size_t self) {
                            t.accumulate(pa, BasicTensor<T>(t.grad(self)));
                            BasicTensor<T> neg = t.grad(self);
                            for (auto& v : neg.data()) v = -v;
                            t.accumulate(pb, std::move(neg));
                          });
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v *= s;
  return a.tape()->record(OpTag::mul_scalar, std::move(out), {a.id()},
                          [pa = a.id(), s](Tape<T>& t, std::size_t self) {
                            BasicTensor<T> g = t.grad(self);
                            for (auto& v : g.data()) v *= s;
                            t.accumulate(pa, std::move(g));
                          });
}

// a * s where s is a [1]-shaped node (e.g. a learnable temperature).
template <typename T>
Var<T> scale(const Var<T>& a, const Var<T>& s) {
  detail::require_same_tape(a, s);
  if (s.value().size() != 1) throw ShapeError("scale: factor must have shape [1], got " + shape_str(s.shape()));
  const T factor = s.value()[0];
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return a.tape()->record(
      OpTag::scale, std::move(out), {a.id(), s.id()},
      [pa = a.id(), ps = s.id()](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad(self);
        const T factor = t.value(ps)[0];
        if (t.requires_grad(pa)) {
          BasicTensor<T> ga = g;
          for (auto& v : ga.data()) v *= factor;
          t.accumulate(pa, std::move(ga));
        }
        if (t.requires_grad(ps)) {
          const auto av = t.value(pa).data();
          const auto gv = g.data();
          T acc{0};
          for (std::size_t i = 0; i < gv.size(); ++i) acc += gv[i] * av[i];
          t.accumulate(ps, BasicTensor<T>::scalar(acc));
        }
      });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v = std::exp(v);
  return a.tape()->record(OpTag::exp, std::move(out), {a.id()},
                          [pa = a.id()](Tape<T>& t, std::size_t self) {
                            BasicTensor<T> g = t.grad(self);
                            const auto y = t.value(self).data();
                            auto gv = g.data();
                            for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= y[i];
                            t.accumulate(pa, std::move(g));
                          });
}

// [M,K] x [K,N] -> [M,N]
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  detail::require_same_tape(a, b);
  detail::require_rank("matmul", a.shape(), 2);
  detail::require_rank("matmul", b.shape(), 2);
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  BasicTensor<T> out({m, n});
  kernels::parallel::gemm(false, false, m, n, k, a.value().raw(), b.value().raw(), out.raw());
  return a.tape()->record(
      OpTag::matmul, std::move(out), {a.id(), b.id()},
      [pa = a.id(), pb = b.id(), m, n, k](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(pa)) {
          BasicTensor<T> ga({m, k});
          kernels::parallel::gemm(false, true, m, k, n, g.raw(), t.value(pb).raw(), ga.raw());
          t.accumulate(pa, std::move(ga));
        }
        if (t.requires_grad(pb)) {
          BasicTensor<T> gb({k, n});
          kernels::parallel::gemm(true, false, k, n, m, t.value(pa).raw(), g.raw(), gb.raw());
          t.accumulate(pb, std::move(gb));
        }
      });
}

// x [N,Cin,L], w [Cout,Cin,K], bias [Cout] -> [N,Cout,Lout]
template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, std::size_t stride,
              std::size_t padding) {
  detail::require_same_tape(x, w);
  detail::require_same_tape(x, bias);
  detail::require_rank("conv1d input", x.shape(), 3);
  detail::require_rank("conv1d weight", w.shape(), 3);
  detail::require_rank("conv1d bias", bias.shape(), 1);
  if (stride == 0) throw ContractError("conv1d: stride must be positive");
  kernels::Conv1dGeometry g;
  g.batch = x.shape()[0];
  g.in_channels = x.shape()[1];
  g.length = x.shape()[2];
  g.out_channels = w.shape()[0];
  g.kernel = w.shape()[2];
  g.stride = stride;
  g.padding = padding;
  if (w.shape()[1] != g.in_channels) {
    throw ShapeError("conv1d: input " + shape_str(x.shape()) + " incompatible with weight " +
                     shape_str(w.shape()));
  }
  if (bias.shape()[0] != g.out_channels) {
    throw ShapeError("conv1d: bias " + shape_str(bias.shape()) + " incompatible with weight " +
                     shape_str(w.shape()));
  }
  if (g.out_length() == 0) {
    throw ShapeError("conv1d: kernel " + shape_str(w.shape()) + " longer than padded input " +
                     shape_str(x.shape()));
  }
  BasicTensor<T> out({g.batch, g.out_channels, g.out_length()});
  auto workspace = std::make_shared<kernels::parallel::Conv1dWorkspace<T>>();
  kernels::parallel::conv1d_forward(g, x.value().raw(), w.value().raw(), bias.value().raw(),
                                    out.raw(), workspace.get());
  const bool needs = x.tape()->requires_grad(x.id()) || x.tape()->requires_grad(w.id()) ||
                     x.tape()->requires_grad(bias.id());
  if (!needs) workspace.reset();
  return x.tape()->record(
      OpTag::conv1d, std::move(out), {x.id(), w.id(), bias.id()},
      [px = x.id(), pw = w.id(), pb = bias.id(), g, workspace](Tape<T>& t, std::size_t self) {
        BasicTensor<T> gx(t.value(px).shape());
        BasicTensor<T> gw(t.value(pw).shape());
        BasicTensor<T> gb(t.value(pb).shape());
        kernels::parallel::conv1d_backward(g, t.value(px).raw(), t.value(pw).raw(),
                                           t.grad(self).raw(), gx.raw(), gw.raw(), gb.raw(),
                                           workspace.get());
        t.accumulate(px, std::move(gx));
        t.accumulate(pw, std::move(gw));
        t.accumulate(pb, std::move(gb));
      });
}

// Subgradient at 0 is 0.
template <typename T>
Var<T> relu(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return a.tape()->record(OpTag::relu, std::move(out), {a.id()},
                          [pa = a.id()](Tape<T>& t, std::size_t self) {
                            BasicTensor<T> g = t.grad(self);
                            const auto x = t.value(pa).data();
                            auto gv = g.data();
                            for (std::size_t i = 0; i < gv.size(); ++i) {
                              if (!(x[i] > T{0})) gv[i] = T{0};
                            }
                            t.accumulate(pa, std::move(g));
                          });
}

// table [V,E], indices -> [n,E]
template <typename T>
Var<T> embedding_lookup(const Var<T>& table, std::span<const std::size_t> indices) {
  detail::require_rank("embedding_lookup", table.shape(), 2);
  if (indices.empty()) throw ShapeError("embedding_lookup: empty index list");
  const std::size_t rows = table.shape()[0];
  const std::size_t dim = table.shape()[1];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  for (const auto i : idx) {
    if (i >= rows) {
      throw ContractError("embedding_lookup: index " + std::to_string(i) + " out of range for table " +
                          shape_str(table.shape()));
    }
  }
  BasicTensor<T> out({idx.size(), dim});
  const T* src = table.value().raw();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(src + idx[r] * dim, dim, out.raw() + r * dim);
  }
  return table.tape()->record(
      OpTag::embedding_lookup, std::move(out), {table.id()},
      [pt = table.id(), idx = std::move(idx), dim](Tape<T>& t, std::size_t self) {
        BasicTensor<T> g(t.value(pt).shape());
        const T* gs = t.grad(self).raw();
        for (std::size_t r = 0; r < idx.size(); ++r) {
          T* dst = g.raw() + idx[r] * dim;
          for (std::size_t j = 0; j < dim; ++j) dst[j] += gs[r * dim + j];
        }
        t.accumulate(pt, std::move(g));
      });
}

// Removes `axis`; a rank-1 input reduces to shape [1].
template <typename T>
Var<T> mean_over_axis(const Var<T>& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) {
    throw ShapeError("mean_over_axis: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(s));
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  const std::size_t count = s[axis];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out_shape.push_back(s[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  BasicTensor<T> out(out_shape);
  const T* x = a.value().raw();
  const T inv = T{1} / static_cast<T>(count);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < count; ++c) {
      const T* src = x + (o * count + c) * inner;
      T* dst = out.raw() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  for (auto& v : out.data()) v *= inv;
  return a.tape()->record(
      OpTag::mean_over_axis, std::move(out), {a.id()},
      [pa = a.id(), outer, count, inner, inv](Tape<T>& t, std::size_t self) {
        BasicTensor<T> g(t.value(pa).shape());
        const T* gs = t.grad(self).raw();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t c = 0; c < count; ++c) {
            T* dst = g.raw() + (o * count + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] = gs[o * inner + i] * inv;
          }
        }
        t.accumulate(pa, std::move(g));
      });
}

// Rows scaled to unit l2 norm. A zero row stays zero and is counted by
// zero_norm_row_count().
template <typename T>
Var<T> l2_normalize_rows(const Var<T>& a) {
  detail::require_rank("l2_normalize_rows", a.shape(), 2);
  const std::size_t rows = a.shape()[0];
  const std::size_t cols = a.shape()[1];
  BasicTensor<T> out(a.shape());
  std::vector<T> norms(rows);
  const T* x = a.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    T ss{0};
    for (std::size_t j = 0; j < cols; ++j) ss += x[r * cols + j] * x[r * cols + j];
    norms[r] = std::sqrt(ss);
    if (norms[r] == T{0}) {
      note_zero_norm_row();
      continue;
    }
    for (std::size_t j = 0; j < cols; ++j) out.raw()[r * cols + j] = x[r * cols + j] / norms[r];
  }
  return a.tape()->record(
      OpTag::l2_normalize_rows, std::move(out), {a.id()},
      [pa = a.id(), rows, cols, norms = std::move(norms)](Tape<T>& t, std::size_t self) {
        BasicTensor<T> g({rows, cols});
        const T* y = t.value(self).raw();
        const T* gy = t.grad(self).raw();
        for (std::size_t r = 0; r < rows; ++r) {
          if (norms[r] == T{0}) continue;
          T dot{0};
          for (std::size_t j = 0; j < cols; ++j) dot += y[r * cols + j] * gy[r * cols + j];
          for (std::size_t j = 0; j < cols; ++j) {
            g.raw()[r * cols + j] = (gy[r * cols + j] - y[r * cols + j] * dot) / norms[r];
          }
        }
        t.accumulate(pa, std::move(g));
      });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  detail::require_rank("transpose", a.shape(), 2);
  const std::size_t rows = a.shape()[0];
  const std::size_t cols = a.shape()[1];
  BasicTensor<T> out({cols, rows});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out.raw()[j * rows + i] = a.value().raw()[i * cols + j];
  }
  return a.tape()->record(OpTag::transpose, std::move(out), {a.id()},
                          [pa = a.id(), rows, cols](Tape<T>& t, std::size_t self) {
                            BasicTensor<T> g({rows, cols});
                            const T* gs = t.grad(self).raw();
                            for (std::size_t i = 0; i < rows; ++i) {
                              for (std::size_t j = 0; j < cols; ++j) {
                                g.raw()[i * cols + j] = gs[j * rows + i];
                              }
                            }
                            t.accumulate(pa, std::move(g));
                          });
}

template <typename T>
Var<T> log_softmax_rows(const Var<T>& a) {
  detail::require_rank("log_softmax_rows", a.shape(), 2);
  const std::size_t rows = a.shape()[0];
  const std::size_t cols = a.shape()[1];
  BasicTensor<T> out(a.shape());
  const T* x = a.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x + r * cols;
    const T mx = *std::max_element(row, row + cols);
    T sum{0};
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(row[j] - mx);
    const T lse = mx + std::log(sum);
    for (std::size_t j = 0; j < cols; ++j) out.raw()[r * cols + j] = row[j] - lse;
  }
  return a.tape()->record(
      OpTag::log_softmax_rows, std::move(out), {a.id()},
      [pa = a.id(), rows, cols](Tape<T>& t, std::size_t self) {
        BasicTensor<T> g({rows, cols});
        const T* y = t.value(self).raw();
        const T* gy = t.grad(self).raw();
        for (std::size_t r = 0; r < rows; ++r) {
          T total{0};
          for (std::size_t j = 0; j < cols; ++j) total += gy[r * cols + j];
          for (std::size_t j = 0; j < cols; ++j) {
            g.raw()[r * cols + j] = gy[r * cols + j] - std::exp(y[r * cols + j]) * total;
          }
        }
        t.accumulate(pa, std::move(g));
      });
}

// [N,N] -> [N]
template <typename T>
Var<T> gather_diag(const Var<T>& a) {
  detail::require_rank("gather_diag", a.shape(), 2);
  const std::size_t n = a.shape()[0];
  if (a.shape()[1] != n) throw ShapeError("gather_diag: matrix not square " + shape_str(a.shape()));
  BasicTensor<T> out({n});
  for (std::size_t i = 0; i < n; ++i) out[i] = a.value().raw()[i * n + i];
  return a.tape()->record(OpTag::gather_diag, std::move(out), {a.id()},
                          [pa = a.id(), n](Tape<T>& t, std::size_t self) {
                            BasicTensor<T> g({n, n});
                            for (std::size_t i = 0; i < n; ++i) g.raw()[i * n + i] = t.grad(self)[i];
                            t.accumulate(pa, std::move(g));
                          });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  BasicTensor<T> out = a.value().reshaped(shape);
  return a.tape()->record(OpTag::reshape, std::move(out), {a.id()},
                          [pa = a.id()](Tape<T>& t, std::size_t self) {
                            t.accumulate(pa, t.grad(self).reshaped(t.value(pa).shape()));
                          });
}

// x [N,in] * w [in,out] + bias [out]. The bias is aligned explicitly as
// ones[N,1] * bias[1,out] rather than broadcast.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias) {
  detail::require_rank("linear", x.shape(), 2);
  detail::require_rank("linear bias", bias.shape(), 1);
  const std::size_t n = x.shape()[0];
  auto ones = x.tape()->constant(BasicTensor<T>::filled({n, 1}, T{1}));
  auto row = reshape(bias, {1, bias.shape()[0]});
  return add(matmul(x, w), matmul(ones, row));
}

}  // namespace clasp::numerics
