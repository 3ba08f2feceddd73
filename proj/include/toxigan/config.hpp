#pragma once
// Run configuration: one JSON file covering data, models, training,
// provider and evaluation. Every field has a default except `output_dir`
// and `data.source`; the effective (defaults filled in) configuration is
// written next to every run's outputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxigan/ballast.hpp"
#include "toxigan/corpus.hpp"
#include "toxigan/discriminator.hpp"
#include "toxigan/evaluation.hpp"
#include "toxigan/objectives.hpp"

namespace toxigan {

enum class TrainMode { full, no_ballast, no_toxicity_step, joint };
enum class Alternation { epoch, minibatch };

const char* train_mode_name(TrainMode m);
TrainMode parse_train_mode(const std::string& name);

struct DataConfig {
  std::string source;  // "synthetic" | "jsonl"
  // synthetic task
  int num_toxic = 2;
  std::size_t content_vocab = 60;
  double mix_rate = 0.6;
  std::size_t min_len = 6;
  std::size_t max_len = 12;
  std::size_t n_per_class = 2000;
  std::uint64_t synthetic_seed = 7;
  std::size_t heldout_neutral = 500;
  // jsonl dataset
  std::string path;
  std::string neutral_label;
  std::vector<std::string> toxic_labels;
  std::string toxic_lexicon;  // optional word list for the lexicon oracle
  // protocol
  SplitRatios split;
  std::uint64_t split_seed = 123;
  double keep_fraction = 0.5;
  bool resplit_per_seed = false;
};

struct EmbeddingConfig {
  std::string backend = "hash_bag";  // "hash_bag" | "remote"
  std::size_t dim = 64;
  std::uint64_t seed = 99;
  std::string endpoint;
  std::string model;
  double timeout_s = 30.0;
  int retries = 3;
};

struct GeneratorConfig {
  std::size_t embed_dim = 16;
  std::size_t hidden = 32;
  std::size_t max_len = 12;
  std::size_t pretrain_epochs = 10;
  double pretrain_lr = 0.01;
  std::size_t pretrain_batch = 32;
  double lr = 0.5;  // REINFORCE step size
  std::size_t batch = 128;
  std::size_t updates_per_epoch = 1;
  Alternation alternation = Alternation::epoch;
};

struct DiscriminatorConfig {
  std::size_t hidden = 32;
  std::size_t pretrain_epochs = 2;
  double lr = 1.0;
  std::size_t batch = 32;
  std::size_t real_per_epoch = 0;  // 0: (K + 1) * generator batch
  std::size_t passes_per_epoch = 1;
  LlmNeutralHead llm_head = LlmNeutralHead::fake;
};

struct BallastConfig {
  std::size_t target_size = 100;
  double r0 = 50.0;
  std::size_t fewshot_k = 5;
};

struct ProviderConfig {
  ProviderMode mode = ProviderMode::corpus_sampler;
  std::string neutral_corpus;  // JSONL; synthetic runs draw a held-out pool when empty
  std::string endpoint;
  std::string model = "llama-3.2-1b-instruct";
  double timeout_s = 30.0;
  int retries = 3;
  int max_tokens = 64;
  std::size_t max_topup = 0;
  std::string prompt_template;  // empty: bundled template
};

struct TrainConfig {
  TrainMode mode = TrainMode::full;
  int max_epoch = 40;
  std::uint64_t model_seed = 1234;
  std::uint64_t sample_seed = 4321;
  std::uint64_t provider_seed = 2468;
  std::size_t checkpoint_keep = 3;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  BallastConfig ballast;
  RewardConfig reward;
};

struct EvaluationConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  DownstreamOptions downstream;
  std::vector<double> joint_lambdas;  // extra joint(λ) runs in ablations
};

struct RunConfig {
  DataConfig data;
  EmbeddingConfig embedding;
  ProviderConfig provider;
  TrainConfig train;
  EvaluationConfig evaluation;
  std::string output_dir;
};

/// Parses and validates. ConfigError names the offending field, e.g.
/// "train.max_epoch: must be >= 0" or "output_dir: required field missing".
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Complete configuration including defaults.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace toxigan
