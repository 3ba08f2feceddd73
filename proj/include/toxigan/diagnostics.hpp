#pragma once
// Measurable side of the policy-gradient analysis: exact gradients on
// enumerable generators, the joint-reward variance identity, and
// gradient-norm convergence curves.

#include <functional>
#include <span>
#include <vector>

#include "toxigan/generator.hpp"
#include "toxigan/train_log.hpp"

namespace toxigan {

struct VarianceReport {
  double var_tox = 0.0;
  double var_auth = 0.0;
  double cov = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double var_joint_direct = 0.0;      // Var(alpha r_tox + beta r_auth)
  double var_joint_decomposed = 0.0;  // alpha² Var + beta² Var + 2 alpha beta Cov
};

/// Population moments. DomainError unless both inputs have the same
/// length >= 2.
VarianceReport variance_decomposition(std::span<const double> r_tox,
                                      std::span<const double> r_auth, double alpha, double beta);

using RewardFn = std::function<double(const TokenSequence&)>;

inline constexpr std::size_t kMaxEnumerable = 10000;

/// Every sequence the generator can emit, in lexicographic order by length.
/// DomainError when there are more than `limit`.
std::vector<TokenSequence> enumerate_sequences(const GeneratorShape& shape,
                                               std::size_t limit = kMaxEnumerable);

/// E[R] = Σ_x P(x|z) R(x) over all sequences.
double expected_reward(const Generator& g, const RewardFn& reward, const NoiseVector& z);

/// Exact ∇θ E[R] = Σ_x P(x|z) R(x) ∇θ log P(x|z) by enumeration. The
/// policy-gradient loss gradient is its negation.
ParameterSet exact_pg_gradient(const Generator& g, const RewardFn& reward, const NoiseVector& z);

/// Central finite differences of expected_reward with respect to every
/// parameter.
ParameterSet finite_difference_gradient(const Generator& g, const RewardFn& reward,
                                        const NoiseVector& z, double step = 1e-5);

struct ConvergenceSeries {
  int class_id = 0;
  StepKind kind = StepKind::toxicity;
  std::vector<int> epochs;
  std::vector<double> grad_norm_sq;
  std::vector<double> running_min;
};

struct ConvergenceCurve {
  std::vector<ConvergenceSeries> series;  // one per (class, step kind)
};

std::vector<double> running_minimum(std::span<const double> values);

/// DomainError on an empty log.
ConvergenceCurve convergence_curve(const TrainLog& log);

/// Columns: class,step_kind,epoch,grad_norm_sq,running_min
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceCurve& curve);

}  // namespace toxigan
