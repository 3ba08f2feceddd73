#include "toxigan/objectives.hpp"

#include <cmath>
#include <string>

#include "toxigan/errors.hpp"

namespace toxigan {

const char* step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::toxicity: return "toxicity";
    case StepKind::authenticity: return "authenticity";
    case StepKind::joint: return "joint";
  }
  return "unknown";
}

double toxicity_loss(const EmbeddingVector& sample, std::span<const EmbeddingVector> pool) {
  if (pool.empty()) throw StateError("toxicity step with an empty ballast pool");
  return max_cosine_to_pool(sample, pool);
}

double toxicity_reward(double loss) {
  if (!(loss >= -1.0 && loss <= 1.0)) {
    throw ContractViolation("toxicity loss outside [-1, 1]: " + std::to_string(loss));
  }
  return (1.0 - loss) / 2.0;
}

namespace {
void check_class(const ClassProbabilities& probs, int class_id) {
  const int K = static_cast<int>(probs.size()) - 2;
  if (class_id < 1 || class_id > K) {
    throw DomainError("authenticity class id must lie in 1.." + std::to_string(K) + ", got " +
                      std::to_string(class_id));
  }
}
}  // namespace

double authenticity_loss(const ClassProbabilities& probs, int class_id) {
  check_class(probs, class_id);
  return 1.0 - probs[static_cast<std::size_t>(class_id)];
}

double authenticity_loss(const Discriminator& d, const TokenSequence& seq, int class_id) {
  if (class_id < 1 || class_id > d.labels().num_toxic()) {
    throw DomainError("authenticity class id out of range: " + std::to_string(class_id));
  }
  return authenticity_loss(d.classify(seq), class_id);
}

double authenticity_reward(const ClassProbabilities& probs, int class_id) {
  check_class(probs, class_id);
  return probs[static_cast<std::size_t>(class_id)];
}

double joint_loss(double tox, double auth, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  return lambda * tox + (1.0 - lambda) * auth;
}

double joint_reward(double r_tox, double r_auth, double lambda) {
  return joint_loss(r_tox, r_auth, lambda);
}

StepKind step_kind_for(long t, ObjectiveMode mode) {
  if (t < 1) throw DomainError("training step index starts at 1, got " + std::to_string(t));
  if (mode == ObjectiveMode::joint) return StepKind::joint;
  return t % 2 == 1 ? StepKind::toxicity : StepKind::authenticity;
}

}  // namespace toxigan
