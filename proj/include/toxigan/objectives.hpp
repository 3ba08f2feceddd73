#pragma once
// Generator losses and the rewards derived from them.
//
//   toxicity loss      max cosine of the sample to the ballast pool
//   toxicity reward    (1 - loss) / 2
//   authenticity loss  1 - D_i(x)
//   authenticity reward D_i(x)
//   joint loss         lambda * tox + (1 - lambda) * auth

#include <span>

#include "toxigan/discriminator.hpp"
#include "toxigan/embedding.hpp"

namespace toxigan {

enum class StepKind { toxicity, authenticity, joint };
const char* step_kind_name(StepKind k);

enum class ObjectiveMode { alternating, joint };

struct RewardConfig {
  double r_max = 1.0;
  double lambda = 0.5;
  double alpha = 0.5;
  double beta = 0.5;
};

/// StateError on an empty pool.
double toxicity_loss(const EmbeddingVector& sample, std::span<const EmbeddingVector> pool);

/// ContractViolation when loss is outside [-1, 1].
double toxicity_reward(double loss);

/// DomainError unless 1 <= class_id <= K.
double authenticity_loss(const ClassProbabilities& probs, int class_id);
double authenticity_loss(const Discriminator& d, const TokenSequence& seq, int class_id);
double authenticity_reward(const ClassProbabilities& probs, int class_id);

/// DomainError unless lambda lies in [0, 1].
double joint_loss(double tox, double auth, double lambda);
double joint_reward(double r_tox, double r_auth, double lambda);

/// Odd t -> toxicity, even t -> authenticity; joint mode always joint.
/// DomainError for t < 1.
StepKind step_kind_for(long t, ObjectiveMode mode = ObjectiveMode::alternating);

}  // namespace toxigan
