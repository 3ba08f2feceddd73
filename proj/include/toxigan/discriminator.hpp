#pragma once
// Multi-head discriminator over K+2 heads:
//   0 = neutral, 1..K = toxic classes, K+1 = fake.

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "toxigan/corpus.hpp"
#include "toxigan/embedding.hpp"
#include "toxigan/mlp.hpp"

namespace toxigan {

/// Where provider-written neutral texts are sent during discriminator
/// training. `fake` follows the objective's literal second term; `neutral`
/// treats head 0 as the LLM-neutral detector.
enum class LlmNeutralHead { fake, neutral };

struct ClassProbabilities {
  std::vector<double> probs;
  double operator[](std::size_t i) const { return probs[i]; }
  std::size_t size() const { return probs.size(); }
};

class Discriminator {
 public:
  Discriminator(LabelSet labels, std::shared_ptr<const EmbeddingBackend> features,
                std::size_t hidden, std::uint64_t seed);

  const LabelSet& labels() const { return labels_; }
  std::size_t num_heads() const { return static_cast<std::size_t>(labels_.num_heads()); }
  const EmbeddingBackend& features() const { return *features_; }

  ClassProbabilities classify(const TokenSequence& seq) const;
  ClassProbabilities classify(const EmbeddingVector& features) const;

  /// Probability of the neutral head.
  double neutrality_score(const TokenSequence& seq) const { return classify(seq)[0]; }

  MlpClassifier& body() { return body_; }
  const MlpClassifier& body() const { return body_; }
  std::size_t hidden() const { return hidden_; }

 private:
  LabelSet labels_;
  std::shared_ptr<const EmbeddingBackend> features_;
  std::size_t hidden_;
  MlpClassifier body_;
};

struct TrainingItem {
  TokenSequence seq;
  std::size_t target = 0;
};

/// Real examples target their own head; generator outputs target the fake
/// head; provider neutral texts target the head chosen by `llm_head`.
/// ContractViolation for a real example carrying the fake label.
std::vector<TrainingItem> build_training_batch(std::span<const LabeledExample> real,
                                               std::span<const std::vector<TokenSequence>> fake_toxic,
                                               std::span<const TokenSequence> llm_neutral,
                                               const LabelSet& labels,
                                               LlmNeutralHead llm_head = LlmNeutralHead::fake);

/// Mean of -log D_target(x) over the batch.
double batch_loss(const Discriminator& d, std::span<const TrainingItem> batch);

/// One SGD step on the batch loss. Returns the loss before the step.
double train_step(Discriminator& d, std::span<const TrainingItem> batch, double lr);

std::uint64_t save_discriminator(const std::filesystem::path& path, const Discriminator& d,
                                 std::uint64_t vocab_hash);
/// Loads parameters into `d` (whose shape and labels must match).
void load_discriminator(const std::filesystem::path& path, Discriminator& d,
                        std::uint64_t vocab_hash);

}  // namespace toxigan
