#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "toxigan/params.hpp"

namespace toxigan {

/// One tanh hidden layer followed by a softmax output. Shared body of the
/// discriminator and of the downstream reference classifier.
///
/// The output layer starts at zero, so a fresh classifier predicts the
/// uniform distribution for every input.
class MlpClassifier {
 public:
  MlpClassifier(std::size_t in_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t num_classes() const { return classes_; }

  std::vector<double> predict(std::span<const double> x) const;

  struct Item {
    std::span<const double> features;
    std::size_t target;
  };

  /// Mean negative log-likelihood of the targets. When `grad` is given the
  /// gradient of that mean is added to it.
  double loss(std::span<const Item> batch, ParameterSet* grad = nullptr) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  std::size_t in_dim_, hidden_, classes_;
  ParameterSet params_;
  std::size_t w1_, b1_, w2_, b2_;
};

}  // namespace toxigan
