#pragma once

#include <cmath>
#include <cstdint>

#include "clasp/numerics/tape.hpp"

namespace clasp::numerics {

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  ParamMap<T> m;
  ParamMap<T> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;
};

// One Adam update with bias correction. Moment buffers are created on first
// use; every gradient must match its parameter's shape.
template <typename T>
void adam_step(ParamMap<T>& params, const ParamMap<T>& grads, AdamState<T>& state) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("adam_step: gradient for unknown parameter " + name);
    if (it->second.shape() != g.shape()) {
      throw ShapeError("adam_step: parameter " + name + " has shape " + shape_str(it->second.shape()) +
                       " but gradient has shape " + shape_str(g.shape()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    auto& m = state.m.try_emplace(name, BasicTensor<T>::zeros(p.shape())).first->second;
    auto& v = state.v.try_emplace(name, BasicTensor<T>::zeros(p.shape())).first->second;
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw ShapeError("adam_step: moment buffers for " + name + " do not match parameter shape");
    }
    const auto g = git->second.data();
    auto pd = p.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double gi = g[i];
      const double mi = state.beta1 * md[i] + (1.0 - state.beta1) * gi;
      const double vi = state.beta2 * vd[i] + (1.0 - state.beta2) * gi * gi;
      md[i] = static_cast<T>(mi);
      vd[i] = static_cast<T>(vi);
      const double update = state.lr * (mi / c1) / (std::sqrt(vi / c2) + state.eps);
      pd[i] = static_cast<T>(pd[i] - update);
    }
  }
}

}  // namespace clasp::numerics
