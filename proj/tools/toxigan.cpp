// Command-line front end: train, generate, evaluate, ablate,
// export-embeddings.

#include <iostream>

#include <CLI11.hpp>

#include "toxigan/commands.hpp"
#include "toxigan/errors.hpp"
#include "toxigan/kernels.hpp"

using namespace toxigan;

int main(int argc, char** argv) {
  CLI::App app{"toxigan: class-conditional adversarial text augmentation"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "Force the numeric kernel set (scalar, avx2, neon)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Pretrain and adversarially train the generators");
  train_cmd->add_option("config", train.config, "Run configuration (JSON)")->required();
  train_cmd->add_option("--set", train.overrides, "Override a config field: key.path=value");
  train_cmd->add_flag("--resume", train.resume, "Continue from the newest checkpoint");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample an augmentation corpus from a checkpoint");
  gen_cmd->add_option("checkpoint", gen.checkpoint, "Checkpoint directory")->required();
  gen_cmd->add_option("--budget", gen.budget, "Per-class counts, e.g. 1:300,2:300 or toxic1=300");
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed");
  gen_cmd->add_option("-o,--output", gen.output, "Output JSONL")->required();

  EvaluateArgs ev;
  std::vector<std::string> aug_specs;
  std::string os_budget;
  auto* ev_cmd = app.add_subcommand("evaluate", "Downstream metrics per augmentation source");
  ev_cmd->add_option("--train", ev.train, "Training JSONL")->required();
  ev_cmd->add_option("--test", ev.test, "Test JSONL")->required();
  ev_cmd->add_option("--aug", aug_specs, "Augmentation as method=path.jsonl (repeatable)");
  ev_cmd->add_option("--labels", ev.labels, "Label names, neutral first")->required()->delimiter(',');
  ev_cmd->add_option("--seeds", ev.seeds, "Classifier seeds")->delimiter(',');
  ev_cmd->add_option("--oversample-budget", os_budget, "Budget for the oversampling rows");
  ev_cmd->add_flag("!--no-base", ev.include_base, "Skip the unaugmented rows");
  ev_cmd->add_flag("!--no-oversample", ev.include_oversample, "Skip the oversampling rows");
  ev_cmd->add_option("--toxic-lexicon", ev.toxic_lexicon, "Word list for average toxicity");
  ev_cmd->add_option("--dim", ev.embed_dim, "Feature dimension");
  ev_cmd->add_option("--embed-seed", ev.embed_seed, "Feature table seed");
  ev_cmd->add_option("--epochs", ev.downstream.epochs, "Classifier epochs");
  ev_cmd->add_option("-o,--output", ev.output, "Report CSV")->required();

  AblateArgs ab;
  std::vector<std::uint64_t> ab_seeds;
  auto* ab_cmd = app.add_subcommand("ablate", "Compare training modes under shared seeds");
  ab_cmd->add_option("config", ab.config, "Run configuration (JSON)")->required();
  ab_cmd->add_option("--set", ab.overrides, "Override a config field: key.path=value");
  ab_cmd->add_option("--seeds", ab_seeds, "Run seeds (default: evaluation.seeds)")->delimiter(',');

  ExportArgs ex;
  std::size_t ex_dim = 0;
  std::uint64_t ex_seed = 0;
  auto* ex_cmd = app.add_subcommand("export-embeddings", "Write feature vectors of corpora as CSV");
  ex_cmd->add_option("checkpoint", ex.checkpoint, "Checkpoint directory")->required();
  ex_cmd->add_option("--corpus", ex.corpora, "JSONL input (repeatable)")->required();
  auto* dim_opt = ex_cmd->add_option("--dim", ex_dim, "Override the feature dimension");
  auto* seed_opt = ex_cmd->add_option("--embed-seed", ex_seed, "Override the feature table seed");
  ex_cmd->add_option("-o,--output", ex.output, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (!kernels.empty()) {
      if (kernels == "scalar") kernels::select(kernels::Isa::scalar);
      else if (kernels == "avx2") kernels::select(kernels::Isa::avx2);
      else if (kernels == "neon") kernels::select(kernels::Isa::neon);
      else throw ConfigError("--kernels must be scalar, avx2 or neon");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }

  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*gen_cmd) return cmd_generate(gen, std::cout, std::cerr);
  if (*ev_cmd) {
    for (const auto& spec : aug_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::cerr << "error: --aug expects method=path, got '" << spec << "'\n";
        return kExitConfig;
      }
      ev.augmentations.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }
    if (!os_budget.empty()) ev.oversample_budget = os_budget;
    return cmd_evaluate(ev, std::cout, std::cerr);
  }
  if (*ab_cmd) {
    if (!ab_seeds.empty()) ab.seeds = ab_seeds;
    return cmd_ablate(ab, std::cout, std::cerr);
  }
  if (*ex_cmd) {
    if (dim_opt->count() > 0) ex.embed_dim = ex_dim;
    if (seed_opt->count() > 0) ex.embed_seed = ex_seed;
    return cmd_export_embeddings(ex, std::cout, std::cerr);
  }
  return kExitFailure;
}
