#include "toxigan/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "toxigan/errors.hpp"
#include "toxigan/kernels.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

MlpClassifier::MlpClassifier(std::size_t in_dim, std::size_t hidden, std::size_t classes,
                             std::uint64_t seed)
    : in_dim_(in_dim), hidden_(hidden), classes_(classes) {
  if (in_dim == 0 || hidden == 0 || classes < 2) throw ConfigError("invalid classifier shape");
  w1_ = params_.add("w1", hidden, in_dim);
  b1_ = params_.add("b1", hidden, 1);
  w2_ = params_.add("w2", classes, hidden);
  b2_ = params_.add("b2", classes, 1);
  Rng rng(seed);
  const auto w = rng.normal_vector(hidden * in_dim, 1.0 / std::sqrt(static_cast<double>(in_dim)));
  std::copy(w.begin(), w.end(), params_.tensor(w1_).begin());
}

std::vector<double> MlpClassifier::predict(std::span<const double> x) const {
  if (x.size() != in_dim_) throw DomainError("classifier input has the wrong dimension");
  std::vector<double> h(params_.tensor(b1_).begin(), params_.tensor(b1_).end());
  kernels::gemv(params_.tensor(w1_).data(), hidden_, in_dim_, x.data(), h.data(), true);
  for (auto& v : h) v = std::tanh(v);
  std::vector<double> p(params_.tensor(b2_).begin(), params_.tensor(b2_).end());
  kernels::gemv(params_.tensor(w2_).data(), classes_, hidden_, h.data(), p.data(), true);
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) sum += (v = std::exp(v - mx));
  for (auto& v : p) v /= sum;
  return p;
}

double MlpClassifier::loss(std::span<const Item> batch, ParameterSet* grad) const {
  if (batch.empty()) throw DomainError("loss over an empty batch");
  if (grad && !grad->same_layout(params_)) throw DomainError("gradient layout mismatch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> h(hidden_), logits(classes_), dlogits(classes_), dh(hidden_);
  const auto w1 = params_.tensor(w1_);
  const auto w2 = params_.tensor(w2_);
  for (const auto& item : batch) {
    if (item.features.size() != in_dim_) throw DomainError("classifier input has the wrong dimension");
    if (item.target >= classes_) throw DomainError("classifier target out of range");
    std::copy(params_.tensor(b1_).begin(), params_.tensor(b1_).end(), h.begin());
    kernels::gemv(w1.data(), hidden_, in_dim_, item.features.data(), h.data(), true);
    for (auto& v : h) v = std::tanh(v);
    std::copy(params_.tensor(b2_).begin(), params_.tensor(b2_).end(), logits.begin());
    kernels::gemv(w2.data(), classes_, hidden_, h.data(), logits.data(), true);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    total -= logits[item.target] - lse;
    if (!grad) continue;
    for (std::size_t k = 0; k < classes_; ++k) dlogits[k] = std::exp(logits[k] - lse) * inv_n;
    dlogits[item.target] -= inv_n;
    kernels::ger(1.0, dlogits.data(), classes_, h.data(), hidden_, grad->tensor(w2_).data());
    kernels::axpy(1.0, dlogits, grad->tensor(b2_));
    std::fill(dh.begin(), dh.end(), 0.0);
    kernels::gemv_t(w2.data(), classes_, hidden_, dlogits.data(), dh.data());
    for (std::size_t j = 0; j < hidden_; ++j) dh[j] *= 1.0 - h[j] * h[j];
    kernels::ger(1.0, dh.data(), hidden_, item.features.data(), in_dim_, grad->tensor(w1_).data());
    kernels::axpy(1.0, dh, grad->tensor(b1_));
  }
  return total * inv_n;
}

}  // namespace toxigan
