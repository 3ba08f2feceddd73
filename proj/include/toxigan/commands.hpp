#pragma once
// Subcommand implementations behind the `toxigan` executable. Each returns
// a process exit status and writes human-readable progress to `out`,
// diagnostics to `err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toxigan/config.hpp"
#include "toxigan/corpus.hpp"
#include "toxigan/generator.hpp"

namespace toxigan {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,  // invalid configuration, schema or input file
  kExitLoad = 3,    // unreadable or mismatched checkpoint
  kExitTransport = 4,
};

/// Maps an exception raised by the library to an exit status.
int exit_code_for(const std::exception& e);

/// Applies "a.b.c=value" overrides to a JSON config. Values parse as JSON
/// when possible and fall back to plain strings.
void apply_overrides(nlohmann::json& config, const std::vector<std::string>& overrides);

/// "1:3,2:0" or "toxic1=3,toxic2=0" -> {label id: count}.
std::map<int, int> parse_budget(const std::string& spec, const LabelSet& labels);

/// Generators and vocabulary restored from a checkpoint directory.
struct TrainedModel {
  std::shared_ptr<const Vocabulary> vocab;
  LabelSet labels;
  std::vector<Generator> generators;
  nlohmann::json run;          // metadata recorded by `train`
  std::uint64_t content_hash;  // combined hash of the generator files
};
TrainedModel load_trained_model(const std::filesystem::path& checkpoint_dir);

struct TrainArgs {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  bool resume = false;
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct GenerateArgs {
  std::filesystem::path checkpoint;
  std::string budget;  // empty: nothing generated
  std::uint64_t seed = 0;
  std::filesystem::path output;
};
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

struct EvaluateArgs {
  std::filesystem::path train;
  std::vector<std::pair<std::string, std::filesystem::path>> augmentations;  // method -> JSONL
  std::filesystem::path test;
  std::vector<std::string> labels;  // neutral first
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool include_base = true;
  bool include_oversample = true;
  std::optional<std::string> oversample_budget;  // default: first augmentation's class counts
  std::filesystem::path toxic_lexicon;           // optional; enables avg_toxicity
  std::size_t embed_dim = 64;
  std::uint64_t embed_seed = 99;
  DownstreamOptions downstream;
  std::filesystem::path output;
};
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

struct AblateArgs {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::optional<std::vector<std::uint64_t>> seeds;  // default: evaluation.seeds
};
int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);

struct ExportArgs {
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> corpora;
  std::optional<std::size_t> embed_dim;
  std::optional<std::uint64_t> embed_seed;
  std::filesystem::path output;
};
int cmd_export_embeddings(const ExportArgs& args, std::ostream& out, std::ostream& err);

/// Seeds of one protocol run, derived from the configured bases.
TrainConfig seeded_train_config(const TrainConfig& base, std::uint64_t run_seed);

}  // namespace toxigan
