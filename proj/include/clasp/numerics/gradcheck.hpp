#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "clasp/numerics/tape.hpp"

namespace clasp::numerics {

struct GradCheckReport {
  double max_rel_error = 0.0;  // over coordinates not excused as kinks
  std::size_t coordinates = 0;
  std::size_t kinks = 0;       // coordinates excluded as non-differentiable points
  std::string worst;           // "name[index]" of the worst coordinate
};

using LossBuilder =
    std::function<Var<double>(Tape<double>&, const std::map<std::string, Var<double>>&)>;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// Compares reverse-mode gradients of `build` against central differences
// with step h. A coordinate whose one-sided differences disagree (a kink,
// e.g. relu at 0) and whose central difference misses is reported in
// `kinks` instead of the error.
inline GradCheckReport finite_diff_check(const LossBuilder& build, const ParamMap<double>& params,
                                         double h, double tolerance = 1e-4) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: h must be positive");
  auto eval = [&](const ParamMap<double>& p) {
    Tape<double> tape;
    const double v = build(tape, tape.parameters(p)).value().item();
    if (!std::isfinite(v)) throw NumericalError("finite_diff_check: loss is not finite");
    return v;
  };

  ParamMap<double> analytic;
  double f0 = 0.0;
  {
    Tape<double> tape;
    auto loss = build(tape, tape.parameters(params));
    f0 = loss.value().item();
    if (!std::isfinite(f0)) throw NumericalError("finite_diff_check: loss is not finite");
    analytic = tape.backward(loss);
  }

  GradCheckReport report;
  ParamMap<double> probe = params;
  for (auto& [name, tensor] : probe) {
    const auto& grad = analytic.at(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double orig = tensor[i];
      tensor[i] = orig + h;
      const double fp = eval(probe);
      tensor[i] = orig - h;
      const double fm = eval(probe);
      tensor[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double err = relative_error(grad[i], numeric);
      ++report.coordinates;
      if (err >= tolerance) {
        const double forward = (fp - f0) / h;
        const double backward = (f0 - fm) / h;
        const bool kink = std::abs(forward - backward) >
                          0.1 * std::max(std::abs(forward), std::abs(backward)) + 1e-6;
        if (kink) {
          ++report.kinks;
          continue;
        }
      }
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace clasp::numerics
