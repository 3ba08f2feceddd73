#include "toxigan/experiment.hpp"

#include <cstdlib>
#include <fstream>

#include "toxigan/errors.hpp"

namespace toxigan {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

// One vocabulary covering the dataset and the provider's held-out texts.
std::shared_ptr<const Vocabulary> merged_vocabulary(const Vocabulary& a, const Vocabulary& b) {
  auto v = std::make_shared<Vocabulary>();
  for (const Vocabulary* src : {&a, &b}) {
    for (TokenId id = Vocabulary::kUnk + 1; id < src->size(); ++id) v->add(src->token(id));
  }
  return v;
}

std::set<TokenId> read_lexicon(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ConfigError("data.toxic_lexicon: cannot open " + path.string());
  std::set<TokenId> out;
  std::string word;
  while (in >> word) {
    for (const auto& tok : tokenize_text(word)) {
      if (vocab.contains(tok)) out.insert(vocab.id(tok));
    }
  }
  return out;
}

}  // namespace

Dataset prepare_dataset(const RunConfig& cfg, std::uint64_t split_seed) {
  const auto& d = cfg.data;
  std::optional<Corpus> full;
  std::optional<Corpus> heldout;
  std::optional<SyntheticTaskSpec> spec;
  std::set<TokenId> lexicon;

  if (d.source == "synthetic") {
    spec = SyntheticTaskSpec::standard(d.num_toxic, d.content_vocab, d.mix_rate, d.min_len,
                                       d.max_len, d.synthetic_seed);
    full = make_synthetic_corpus(*spec, d.n_per_class);
    heldout = make_synthetic_neutral(*spec, d.heldout_neutral,
                                     derive_seed(d.synthetic_seed, 17));
    if (!cfg.provider.neutral_corpus.empty()) {
      heldout = load_jsonl(cfg.provider.neutral_corpus, spec->labels, spec->vocab);
    }
    const auto u = spec->toxic_union();
    lexicon.insert(u.begin(), u.end());
  } else {
    // The vocabulary comes from the training split (plus the provider's
    // held-out texts); words seen only in val/test map to the unknown id.
    LabelSet labels(d.neutral_label, d.toxic_labels);
    Corpus raw = load_jsonl(d.path, labels);
    Split raw_split = split_dataset(raw, d.split, split_seed);
    std::shared_ptr<const Vocabulary> vocab = vocabulary_from(raw_split.train);
    Corpus raw_neutral = raw.empty_like();
    if (!cfg.provider.neutral_corpus.empty()) {
      raw_neutral = load_jsonl(cfg.provider.neutral_corpus, labels);
      vocab = merged_vocabulary(*vocab, raw_neutral.vocab());
    }
    Split split{retokenize(raw_split.train, vocab), retokenize(raw_split.val, vocab),
                retokenize(raw_split.test, vocab)};
    Corpus all = retokenize(raw, vocab);
    Corpus neutral = retokenize(raw_neutral, vocab).filter_label(0);
    if (!d.toxic_lexicon.empty()) lexicon = read_lexicon(d.toxic_lexicon, *vocab);
    LowResource low = simulate_low_resource(split.train, d.keep_fraction,
                                            derive_seed(split_seed, 1));
    return Dataset{vocab, labels, std::move(all), std::move(split), std::move(low),
                   std::move(neutral), std::nullopt, std::move(lexicon)};
  }

  Split split = split_dataset(*full, d.split, split_seed);
  LowResource low = simulate_low_resource(split.train, d.keep_fraction,
                                          derive_seed(split_seed, 1));
  Dataset out{full->vocab_ptr(), full->labels(), *full, std::move(split), std::move(low),
              heldout->filter_label(0), spec, std::move(lexicon)};
  return out;
}

std::shared_ptr<const EmbeddingBackend> make_embedding(const RunConfig& cfg,
                                                       std::shared_ptr<const Vocabulary> vocab) {
  const auto& e = cfg.embedding;
  if (e.backend == "remote") {
    HttpEndpoint ep{e.endpoint, env_or("TOXIGAN_EMBEDDING_API_KEY", ""), e.timeout_s, e.retries};
    return std::make_shared<RemoteEmbeddingBackend>(vocab, ep, e.model, e.dim);
  }
  return std::make_shared<HashBagBackend>(vocab->size(), e.dim, e.seed);
}

std::shared_ptr<NeutralProvider> make_provider(const RunConfig& cfg, const Dataset& data,
                                               std::uint64_t seed) {
  const auto& p = cfg.provider;
  if (p.mode == ProviderMode::remote_llm) {
    RemoteLlmOptions opts;
    opts.endpoint.url = env_or("TOXIGAN_PROVIDER_ENDPOINT", p.endpoint);
    opts.endpoint.api_key = env_or("TOXIGAN_PROVIDER_API_KEY", "");
    opts.endpoint.timeout_s = p.timeout_s;
    opts.endpoint.retries = p.retries;
    opts.model = p.model;
    opts.max_tokens = p.max_tokens;
    opts.max_topup = p.max_topup;
    if (opts.endpoint.url.empty()) {
      throw ConfigError(
          "provider.endpoint: required for remote_llm mode (or set TOXIGAN_PROVIDER_ENDPOINT)");
    }
    return std::make_shared<RemoteLlmProvider>(data.vocab, data.labels, opts);
  }
  if (data.heldout_neutral.empty()) {
    throw ConfigError("provider.neutral_corpus: the corpus sampler needs neutral texts");
  }
  return std::make_shared<CorpusSamplerProvider>(data.heldout_neutral, seed);
}

std::string prompt_template_for(const RunConfig& cfg) {
  return load_prompt_template(cfg.provider.prompt_template.empty()
                                  ? default_prompt_template_path()
                                  : std::filesystem::path(cfg.provider.prompt_template));
}

}  // namespace toxigan
