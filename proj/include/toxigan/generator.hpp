#pragma once
// Class-conditional LSTM sequence generator: sampling, exact
// log-probabilities, MLE pretraining and REINFORCE updates.
//
// Noise enters as the initial hidden state h_0 = z (c_0 = 0). The first
// input is a dedicated start embedding (row `vocab_size` of the embedding
// table). When an end token is configured it is masked out at the first
// step, so sampled sequences are never empty; a sequence shorter than
// max_len ends with an explicit end-token step whose log-probability is the
// last entry of step_logprobs. Without an end token every sequence has
// exactly max_len tokens.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "toxigan/corpus.hpp"
#include "toxigan/params.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

struct GeneratorShape {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 16;
  std::size_t hidden = 32;
  std::size_t max_len = 12;
  std::optional<TokenId> end_token;

  bool operator==(const GeneratorShape&) const = default;
};

struct NoiseVector {
  std::vector<double> values;
};

struct GenerationSample {
  TokenSequence seq;
  std::vector<double> step_logprobs;
  double total_logprob = 0.0;
  NoiseVector z;
};

struct ScoredSample {
  GenerationSample sample;
  double reward = 0.0;
};

class Generator {
 public:
  Generator(int class_id, GeneratorShape shape, std::uint64_t init_seed);

  int class_id() const { return class_id_; }
  const GeneratorShape& shape() const { return shape_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  NoiseVector draw_noise(Rng& rng) const;

  /// Draws from the full softmax at every step (temperature 1).
  GenerationSample sample(const NoiseVector& z, Rng& rng) const;

  /// Exact log P(seq | z). DomainError on invalid tokens, on the end token
  /// inside seq, or on sequences longer than max_len.
  double log_prob(const NoiseVector& z, const TokenSequence& seq) const;

  /// Adds coef * d/dθ log P(seq | z) to `grad` (same layout as params()).
  /// Returns log P(seq | z).
  double accumulate_log_prob_grad(const NoiseVector& z, const TokenSequence& seq, double coef,
                                  ParameterSet& grad) const;

  /// Next-token distributions along seq (teacher forced). Entry t is the
  /// distribution the t-th token was drawn from; when seq is shorter than
  /// max_len and an end token exists one extra distribution is appended.
  std::vector<std::vector<double>> step_distributions(const NoiseVector& z,
                                                      const TokenSequence& seq) const;

  /// Number of prediction steps log_prob(seq) is made of.
  std::size_t num_steps(const TokenSequence& seq) const;

 private:
  struct Layout {
    std::size_t embedding, wx, wh, bias, out_w, out_b;
  };
  struct StepCache;

  void validate(const TokenSequence& seq) const;
  std::vector<StepCache> forward(const NoiseVector& z, const TokenSequence& seq) const;

  int class_id_;
  GeneratorShape shape_;
  ParameterSet params_;
  Layout at_{};
};

struct MleOptions {
  std::size_t epochs = 10;
  double lr = 0.01;
  std::size_t batch_size = 32;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

struct MleReport {
  std::vector<double> epoch_nll;  // mean NLL per predicted token, per epoch
};

/// Adam on the mean per-token negative log-likelihood of `data` (all
/// examples must carry the generator's class). ConfigError when empty.
MleReport mle_pretrain(Generator& g, const Corpus& data, const MleOptions& options);

/// Mean per-token NLL of `data` with fresh noise drawn from `rng`.
double mean_nll(const Generator& g, const Corpus& data, Rng& rng);

/// Sum of coef * grad log P over a batch.
ParameterSet score_gradient(const Generator& g,
                            std::span<const std::pair<const GenerationSample*, double>> terms);

/// One REINFORCE ascent step: θ += lr * (1/N) Σ R_n ∇ log P(x_n).
/// Rewards must lie in [0, r_max]; otherwise ContractViolation. Returns the
/// Euclidean norm of the gradient estimate.
double reinforce_update(Generator& g, std::span<const ScoredSample> batch, double lr,
                        double r_max = 1.0);

std::uint64_t save_generator(const std::filesystem::path& path, const Generator& g,
                             std::uint64_t vocab_hash);
/// LoadError when the stored vocabulary hash differs from `vocab_hash`.
Generator load_generator(const std::filesystem::path& path, std::uint64_t vocab_hash);

}  // namespace toxigan
