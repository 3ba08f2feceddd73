#pragma once
// Neutral exemplar pool ("semantic ballast"), its adaptive top-r
// refinement, few-shot prompt assembly and neutral-text providers.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "toxigan/corpus.hpp"
#include "toxigan/discriminator.hpp"
#include "toxigan/embedding.hpp"
#include "toxigan/http.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

/// Candidates are real neutral examples with cached embeddings. Each
/// refinement keeps the ceil(r% of the initial pool size) highest-scoring
/// candidates, never fewer than target_size, then halves r. Once the pool
/// is at target_size its size is held and members are re-ranked only.
class BallastPool {
 public:
  BallastPool(std::vector<LabeledExample> neutral, const EmbeddingBackend& phi, int num_toxic,
              std::size_t target_size, double r0_percent = 50.0);

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  double r_percent() const { return r_percent_; }
  std::size_t target_size() const { return target_size_; }
  std::size_t initial_size() const { return initial_size_; }
  int epoch_of_last_refine() const { return epoch_of_last_refine_; }
  int num_toxic() const { return num_toxic_; }

  const std::vector<LabeledExample>& examples() const { return examples_; }
  const std::vector<EmbeddingVector>& embeddings() const { return embeddings_; }
  /// Position of each member in the initial candidate list.
  const std::vector<std::size_t>& origin() const { return origin_; }

  /// Scored refinement step; see refine_pool.
  BallastPool refined(const std::vector<double>& scores, int epoch) const;

  /// Restores a pool to a recorded membership (checkpoint resume).
  BallastPool with_members(const std::vector<std::size_t>& origin_positions, double r_percent,
                           int epoch_of_last_refine) const;

 private:
  BallastPool() = default;

  std::vector<LabeledExample> examples_;
  std::vector<EmbeddingVector> embeddings_;
  std::vector<std::size_t> origin_;
  double r_percent_ = 50.0;
  std::size_t target_size_ = 100;
  std::size_t initial_size_ = 0;
  int epoch_of_last_refine_ = 0;
  int num_toxic_ = 1;
  // Full initial candidate list, shared by every refined copy.
  std::shared_ptr<const std::vector<LabeledExample>> all_examples_;
  std::shared_ptr<const std::vector<EmbeddingVector>> all_embeddings_;
};

/// Scores members by the discriminator's neutral head and applies one
/// refinement step. StateError if the discriminator's head layout does not
/// match the pool's class count or the pool is empty.
BallastPool refine_pool(const BallastPool& pool, const Discriminator& d, int epoch = 0);

struct PromptText {
  std::string text;
  std::vector<std::size_t> exemplars;  // pool positions used
};

std::string load_prompt_template(const std::filesystem::path& path);
std::filesystem::path default_prompt_template_path();

/// Seeded choice of k distinct pool members rendered into the template's
/// {{examples}} slot. ConfigError when k exceeds the pool size.
PromptText assemble_fewshot_prompt(const BallastPool& pool, const Vocabulary& vocab,
                                   std::size_t k, std::uint64_t seed,
                                   const std::string& prompt_template);

enum class ProviderMode { remote_llm, corpus_sampler };

class NeutralProvider {
 public:
  virtual ~NeutralProvider() = default;
  virtual std::string name() const = 0;
  virtual ProviderMode mode() const = 0;

  /// n neutral examples with source llm_neutral.
  std::vector<LabeledExample> provide(const PromptText& prompt, std::size_t n);

  std::size_t calls() const { return calls_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Resumable stream state (empty for stateless providers).
  virtual std::string state() const { return {}; }
  virtual void restore(const std::string&) {}

 protected:
  virtual std::vector<LabeledExample> do_provide(const PromptText& prompt, std::size_t n) = 0;
  void warn(std::string message);

 private:
  std::size_t calls_ = 0;
  std::vector<std::string> warnings_;
};

/// Offline stand-in: seeded draws (with replacement) from a held-out neutral
/// corpus. The prompt content is ignored.
class CorpusSamplerProvider final : public NeutralProvider {
 public:
  CorpusSamplerProvider(Corpus heldout_neutral, std::uint64_t seed);

  std::string name() const override { return "corpus_sampler"; }
  ProviderMode mode() const override { return ProviderMode::corpus_sampler; }
  std::string state() const override { return rng_.state(); }
  void restore(const std::string& s) override { rng_.restore(s); }

 protected:
  std::vector<LabeledExample> do_provide(const PromptText& prompt, std::size_t n) override;

 private:
  Corpus pool_;
  Rng rng_;
};

struct RemoteLlmOptions {
  HttpEndpoint endpoint;
  std::string model;
  int max_tokens = 64;
  /// Extra requests allowed to replace empty completions.
  std::size_t max_topup = 0;
};

/// Chat-completion client: one request per requested text,
/// {"model", "messages": [{"role": "user", "content": prompt}], "max_tokens"}
/// and the completion read from choices[0].message.content. Completions are
/// tokenized through the run vocabulary; empty ones are skipped with a
/// warning.
class RemoteLlmProvider final : public NeutralProvider {
 public:
  RemoteLlmProvider(std::shared_ptr<const Vocabulary> vocab, LabelSet labels,
                    RemoteLlmOptions options);

  std::string name() const override { return "remote_llm"; }
  ProviderMode mode() const override { return ProviderMode::remote_llm; }
  std::size_t requests() const { return requests_; }

 protected:
  std::vector<LabeledExample> do_provide(const PromptText& prompt, std::size_t n) override;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  LabelSet labels_;
  RemoteLlmOptions options_;
  std::size_t requests_ = 0;
};

}  // namespace toxigan
