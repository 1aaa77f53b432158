#pragma once

#include <cmath>

#include "clasp/error.hpp"
#include "clasp/numerics/ops.hpp"

namespace clasp::contrastive {

using numerics::BasicTensor;
using numerics::Tape;
using numerics::Var;

inline constexpr double kMaxTemperature = 100.0;
// ln(1/0.07)
inline const double kInitialLogTemperature = std::log(1.0 / 0.07);

// feature [N,in] -> embedding [N,d]; rows l2-normalised when `normalize`.
template <typename T>
Var<T> project(const Var<T>& feature, const Var<T>& weight, const Var<T>& bias, bool normalize) {
  auto e = numerics::linear(feature, weight, bias);
  return normalize ? numerics::l2_normalize_rows(e) : e;
}

// C = tau * E_t E_s^T, rows index text, columns index signals. `tau` is [1].
template <typename T>
Var<T> similarity_matrix(const Var<T>& text, const Var<T>& signal, const Var<T>& tau) {
  numerics::detail::require_rank("similarity_matrix text", text.shape(), 2);
  numerics::detail::require_rank("similarity_matrix signal", signal.shape(), 2);
  if (text.shape() != signal.shape()) {
    throw ShapeError("similarity_matrix: text " + numerics::shape_str(text.shape()) +
                     " and signal " + numerics::shape_str(signal.shape()) + " differ");
  }
  if (tau.value().size() != 1 || !(tau.value().item() > T{0})) {
    throw ContractError("similarity_matrix: temperature must be a positive scalar");
  }
  return numerics::scale(numerics::matmul(text, numerics::transpose(signal)), tau);
}

// 0.5 * (l_t + l_s), each the mean negative log-probability of the diagonal
// under a row softmax of C (l_t) or of C^T (l_s).
template <typename T>
Var<T> clasp_loss(const Var<T>& c) {
  numerics::detail::require_rank("clasp_loss", c.shape(), 2);
  if (c.shape()[0] != c.shape()[1]) {
    throw ShapeError("clasp_loss: similarity matrix not square " + numerics::shape_str(c.shape()));
  }
  if (!c.value().all_finite()) throw NumericalError("clasp_loss: similarity matrix is not finite");
  auto lt = numerics::mean_over_axis(numerics::gather_diag(numerics::log_softmax_rows(c)), 0);
  auto ls = numerics::mean_over_axis(
      numerics::gather_diag(numerics::log_softmax_rows(numerics::transpose(c))), 0);
  return numerics::mul_scalar(numerics::add(lt, ls), T{-0.5});
}

}  // namespace clasp::contrastive
