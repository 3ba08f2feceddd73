#include "toxigan/ballast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "toxigan/errors.hpp"

namespace toxigan {

BallastPool::BallastPool(std::vector<LabeledExample> neutral, const EmbeddingBackend& phi,
                         int num_toxic, std::size_t target_size, double r0_percent)
    : r_percent_(r0_percent), target_size_(target_size), num_toxic_(num_toxic) {
  if (neutral.empty()) throw StateError("ballast pool needs at least one neutral candidate");
  if (target_size == 0) throw ConfigError("ballast target_size must be >= 1");
  if (!(r0_percent > 0.0 && r0_percent <= 100.0)) {
    throw ConfigError("ballast r0 must lie in (0, 100]");
  }
  std::vector<EmbeddingVector> embs;
  embs.reserve(neutral.size());
  for (auto& ex : neutral) {
    if (ex.label != 0) throw ContractViolation("ballast candidates must be neutral-labeled");
    embs.push_back(phi.embed(ex.seq));
  }
  initial_size_ = neutral.size();
  examples_ = neutral;
  embeddings_ = embs;
  origin_.resize(initial_size_);
  std::iota(origin_.begin(), origin_.end(), 0);
  all_examples_ = std::make_shared<const std::vector<LabeledExample>>(std::move(neutral));
  all_embeddings_ = std::make_shared<const std::vector<EmbeddingVector>>(std::move(embs));
}

BallastPool BallastPool::refined(const std::vector<double>& scores, int epoch) const {
  if (empty()) throw StateError("refining an empty ballast pool");
  if (scores.size() != size()) throw DomainError("one score per pool member required");

  std::size_t keep = size();
  const bool shrinking = size() > target_size_;
  if (shrinking) {
    const double want = std::ceil(r_percent_ / 100.0 * static_cast<double>(initial_size_) - 1e-9);
    keep = std::clamp<std::size_t>(static_cast<std::size_t>(want), target_size_, size());
  }

  // Highest score first; equal scores keep their pool order.
  std::vector<std::size_t> rank(size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  rank.resize(keep);
  std::sort(rank.begin(), rank.end());

  BallastPool out = *this;
  out.examples_.clear();
  out.embeddings_.clear();
  out.origin_.clear();
  for (std::size_t i : rank) {
    out.examples_.push_back(examples_[i]);
    out.embeddings_.push_back(embeddings_[i]);
    out.origin_.push_back(origin_[i]);
  }
  if (shrinking) out.r_percent_ = r_percent_ / 2.0;
  out.epoch_of_last_refine_ = epoch;
  return out;
}

BallastPool BallastPool::with_members(const std::vector<std::size_t>& origin_positions,
                                      double r_percent, int epoch_of_last_refine) const {
  BallastPool out = *this;
  out.examples_.clear();
  out.embeddings_.clear();
  out.origin_ = origin_positions;
  for (std::size_t pos : origin_positions) {
    if (pos >= initial_size_) throw LoadError("ballast member index out of range");
    out.examples_.push_back((*all_examples_)[pos]);
    out.embeddings_.push_back((*all_embeddings_)[pos]);
  }
  out.r_percent_ = r_percent;
  out.epoch_of_last_refine_ = epoch_of_last_refine;
  return out;
}

BallastPool refine_pool(const BallastPool& pool, const Discriminator& d, int epoch) {
  if (d.labels().num_toxic() != pool.num_toxic()) {
    throw StateError("discriminator has " + std::to_string(d.num_heads()) +
                     " heads, ballast pool expects " + std::to_string(pool.num_toxic() + 2));
  }
  std::vector<double> scores;
  scores.reserve(pool.size());
  for (const auto& ex : pool.examples()) scores.push_back(d.neutrality_score(ex.seq));
  return pool.refined(scores, epoch);
}

std::filesystem::path default_prompt_template_path() {
  return std::filesystem::path(TOXIGAN_SHARE_DIR) / "prompts" / "neutral_fewshot.v1.txt";
}

std::string load_prompt_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read prompt template: " + path.string());
  std::string out, line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line;
    out += '\n';
  }
  if (out.find("{{examples}}") == std::string::npos) {
    throw ConfigError("prompt template lacks the {{examples}} slot: " + path.string());
  }
  return out;
}

PromptText assemble_fewshot_prompt(const BallastPool& pool, const Vocabulary& vocab,
                                   std::size_t k, std::uint64_t seed,
                                   const std::string& prompt_template) {
  if (k > pool.size()) {
    throw ConfigError("few-shot k=" + std::to_string(k) + " exceeds ballast pool size " +
                      std::to_string(pool.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  idx.resize(k);

  std::string block;
  for (std::size_t i : idx) {
    block += "- ";
    const auto& seq = pool.examples()[i].seq;
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (j) block += ' ';
      block += vocab.token(seq[j]);
    }
    block += '\n';
  }
  if (!block.empty()) block.pop_back();

  PromptText prompt{prompt_template, idx};
  const std::string slot = "{{examples}}";
  const auto at = prompt.text.find(slot);
  if (at == std::string::npos) throw ConfigError("prompt template lacks the {{examples}} slot");
  prompt.text.replace(at, slot.size(), block);
  return prompt;
}

std::vector<LabeledExample> NeutralProvider::provide(const PromptText& prompt, std::size_t n) {
  if (n < 1) throw ConfigError("neutral provider asked for zero texts");
  ++calls_;
  auto out = do_provide(prompt, n);
  for (auto& ex : out) {
    ex.label = 0;
    ex.source = Source::llm_neutral;
  }
  return out;
}

void NeutralProvider::warn(std::string message) {
  std::cerr << "warning: " << name() << ": " << message << '\n';
  warnings_.push_back(std::move(message));
}

CorpusSamplerProvider::CorpusSamplerProvider(Corpus heldout_neutral, std::uint64_t seed)
    : pool_(std::move(heldout_neutral)), rng_(seed) {
  if (pool_.count(0) == 0) throw ConfigError("corpus sampler needs neutral examples");
}

std::vector<LabeledExample> CorpusSamplerProvider::do_provide(const PromptText&, std::size_t n) {
  const auto& members = pool_.class_indices(0);
  std::vector<LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool_[members[rng_.index(members.size())]]);
  return out;
}

RemoteLlmProvider::RemoteLlmProvider(std::shared_ptr<const Vocabulary> vocab, LabelSet labels,
                                     RemoteLlmOptions options)
    : vocab_(std::move(vocab)), labels_(std::move(labels)), options_(std::move(options)) {
  if (options_.endpoint.url.empty()) throw ConfigError("remote provider needs an endpoint URL");
}

std::vector<LabeledExample> RemoteLlmProvider::do_provide(const PromptText& prompt,
                                                          std::size_t n) {
  const nlohmann::json request{
      {"model", options_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text}}})},
      {"max_tokens", options_.max_tokens}};
  std::vector<LabeledExample> out;
  const std::size_t budget = n + options_.max_topup;
  for (std::size_t attempt = 0; attempt < budget && out.size() < n; ++attempt) {
    ++requests_;
    const auto reply = post_json(options_.endpoint, request);
    std::string text;
    try {
      const auto& content = reply.at("choices").at(0).at("message").at("content");
      if (content.is_string()) text = content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed chat completion: ") + e.what());
    }
    TokenSequence seq;
    for (const auto& w : tokenize_text(text)) seq.push_back(vocab_->id(w));
    if (seq.empty()) {
      warn("empty completion skipped (request " + std::to_string(requests_) + ")");
      continue;
    }
    out.push_back({std::move(seq), 0, Source::llm_neutral});
  }
  return out;
}

}  // namespace toxigan
