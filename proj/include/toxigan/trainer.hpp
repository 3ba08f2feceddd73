#pragma once
// The adversarial training loop: MLE pretraining, alternating
// toxicity/authenticity generator updates, discriminator refresh with
// provider-written neutral texts, ballast refinement, checkpointing and
// resume.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxigan/ballast.hpp"
#include "toxigan/config.hpp"
#include "toxigan/discriminator.hpp"
#include "toxigan/generator.hpp"
#include "toxigan/train_log.hpp"

namespace toxigan {

/// Every reward handed to reinforce_update passes through here first.
struct RewardAudit {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double min = 0.0;
  double max = 0.0;
};

struct RunOptions {
  /// Where checkpoints, trainlog.csv and convergence.csv go. Empty: nothing
  /// is written.
  std::filesystem::path out_dir;
  /// Continue from the newest checkpoint under out_dir when present.
  bool resume = false;
  /// Stop after this many epochs in total (for tests of resume); -1: max_epoch.
  int stop_after = -1;
};

class Trainer {
 public:
  /// `train` is the labelled training slice (neutral + K toxic classes).
  /// `provider` may be null only in no_ballast mode. `validation`, when
  /// given, selects the best checkpoint by mean generator NLL.
  Trainer(TrainConfig cfg, Corpus train, std::shared_ptr<const EmbeddingBackend> phi,
          std::shared_ptr<NeutralProvider> provider, std::string prompt_template,
          std::optional<Corpus> validation = std::nullopt);

  /// Generator MLE, initial fakes, initial provider batch, discriminator
  /// pretraining and the initial ballast pool.
  void pretrain();

  /// One epoch t >= 1. Returns the records it appended to the log.
  std::vector<TrainRecord> adversarial_epoch(int t);

  /// pretrain (unless resuming) followed by the remaining epochs.
  const TrainLog& run(const RunOptions& options = {});

  /// budget[i] samples from G_i for each toxic class i. ConfigError for a
  /// class outside 1..K or a negative count.
  Corpus generate_augmentation(const std::map<int, int>& budget, std::uint64_t seed) const;

  void save_checkpoint(const std::filesystem::path& dir) const;
  void load_checkpoint(const std::filesystem::path& dir);

  const TrainConfig& config() const { return cfg_; }
  const Corpus& train_corpus() const { return train_; }
  const LabelSet& labels() const { return train_.labels(); }
  const std::vector<Generator>& generators() const { return generators_; }
  std::vector<Generator>& generators() { return generators_; }
  const Discriminator& discriminator() const { return *d_; }
  const BallastPool* pool() const { return pool_ ? &*pool_ : nullptr; }
  const TrainLog& log() const { return log_; }
  int epochs_done() const { return epoch_; }
  bool pretrained() const { return pretrained_; }
  std::size_t provider_calls() const {
    return provider_calls_base_ + (provider_ ? provider_->calls() : 0);
  }
  std::size_t refinements() const { return refinements_; }
  const RewardAudit& reward_audit() const { return audit_; }
  /// Pool size after pretraining and after every refinement.
  const std::vector<std::size_t>& pool_history() const { return pool_history_; }
  /// Generated batches of the most recent epoch, index i-1 for class i.
  const std::vector<std::vector<TokenSequence>>& last_fakes() const { return fakes_; }
  /// Mean per-token validation NLL over classes; NaN without validation data.
  double validation_score() const;

  /// Free-form run description stored with every checkpoint.
  void set_run_metadata(nlohmann::json meta) { run_meta_ = std::move(meta); }

  /// Called after every completed epoch (also the pretraining "epoch 0").
  std::function<void(int epoch)> on_epoch_end;

 private:
  StepKind kind_for(int t, std::size_t update) const;
  double checked_reward(double r);
  std::vector<TokenSequence> provider_batch();
  std::vector<double> rewards_for(int class_id, StepKind kind,
                                  const std::vector<GenerationSample>& samples,
                                  double& mean_loss) const;
  double discriminator_pass(const std::vector<TrainingItem>& items);
  std::uint64_t vocab_hash() const { return train_.vocab().hash(); }
  bool uses_pool() const { return cfg_.mode != TrainMode::no_ballast; }

  TrainConfig cfg_;
  Corpus train_;
  std::optional<Corpus> validation_;
  std::shared_ptr<const EmbeddingBackend> phi_;
  std::shared_ptr<NeutralProvider> provider_;
  std::string prompt_template_;
  nlohmann::json run_meta_ = nlohmann::json::object();

  std::vector<Generator> generators_;
  std::optional<Discriminator> d_;
  std::optional<BallastPool> pool_;
  std::optional<BallastPool> initial_pool_;

  std::vector<Rng> class_rngs_;
  Rng d_rng_;
  Rng prompt_rng_;

  TrainLog log_;
  int epoch_ = 0;
  bool pretrained_ = false;
  std::size_t refinements_ = 0;
  std::size_t provider_calls_base_ = 0;  // calls made before a resume
  RewardAudit audit_;
  std::vector<std::size_t> pool_history_;
  std::vector<std::vector<TokenSequence>> fakes_;
};

/// budget[i] samples from generators[i-1], drawn from a stream derived
/// from `seed` and the class id; labels and vocabulary follow `like`.
Corpus sample_augmentation(const std::vector<Generator>& generators, const Corpus& like,
                           const std::map<int, int>& budget, std::uint64_t seed);

/// Newest epoch_XXXX directory under out_dir/checkpoints, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& out_dir);

}  // namespace toxigan
