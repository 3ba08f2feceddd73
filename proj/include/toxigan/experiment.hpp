#pragma once
// Turns a RunConfig into concrete inputs: the labelled dataset and its
// split, the low-resource training slice, the embedding backend and the
// neutral-text provider.

#include <memory>
#include <optional>
#include <set>

#include "toxigan/ballast.hpp"
#include "toxigan/config.hpp"
#include "toxigan/corpus.hpp"
#include "toxigan/embedding.hpp"

namespace toxigan {

struct Dataset {
  std::shared_ptr<const Vocabulary> vocab;
  LabelSet labels;
  Corpus full;
  Split split;
  LowResource low;          // from split.train
  Corpus heldout_neutral;   // the offline provider's source texts
  std::optional<SyntheticTaskSpec> synthetic;
  std::set<TokenId> toxic_lexicon;  // empty when no lexicon is available
};

/// Builds (or loads) the corpus and splits it with `split_seed`.
Dataset prepare_dataset(const RunConfig& cfg, std::uint64_t split_seed);

std::shared_ptr<const EmbeddingBackend> make_embedding(const RunConfig& cfg,
                                                       std::shared_ptr<const Vocabulary> vocab);

/// Provider API key comes from TOXIGAN_PROVIDER_API_KEY; TOXIGAN_PROVIDER_ENDPOINT
/// overrides the configured endpoint.
std::shared_ptr<NeutralProvider> make_provider(const RunConfig& cfg, const Dataset& data,
                                               std::uint64_t seed);

/// Reads the configured prompt template, or the bundled one.
std::string prompt_template_for(const RunConfig& cfg);

}  // namespace toxigan
