#pragma once

#include <cmath>

#include "toxigan/params.hpp"

namespace toxigan {

/// Adam over a flat parameter set. `grad` is the gradient of the loss.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m, v;
  long t = 0;

  void step(ParameterSet& params, const ParameterSet& grad, double lr) {
    auto p = params.flat();
    auto g = grad.flat();
    if (m.size() != p.size()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    if (lr == 0.0) return;
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

/// Rescales grad in place so its norm is at most max_norm.
inline void clip_norm(ParameterSet& grad, double max_norm) {
  const double n = grad.norm();
  if (max_norm > 0.0 && n > max_norm) {
    for (auto& x : grad.flat()) x *= max_norm / n;
  }
}

}  // namespace toxigan
