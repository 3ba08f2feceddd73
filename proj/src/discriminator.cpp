#include "toxigan/discriminator.hpp"

#include "toxigan/errors.hpp"
#include "toxigan/kernels.hpp"

namespace toxigan {

Discriminator::Discriminator(LabelSet labels, std::shared_ptr<const EmbeddingBackend> features,
                             std::size_t hidden, std::uint64_t seed)
    : labels_(std::move(labels)),
      features_(std::move(features)),
      hidden_(hidden),
      body_(features_->dim(), hidden, static_cast<std::size_t>(labels_.num_heads()), seed) {}

ClassProbabilities Discriminator::classify(const TokenSequence& seq) const {
  return classify(features_->embed(seq));
}

ClassProbabilities Discriminator::classify(const EmbeddingVector& features) const {
  return {body_.predict(features.values)};
}

std::vector<TrainingItem> build_training_batch(std::span<const LabeledExample> real,
                                               std::span<const std::vector<TokenSequence>> fake_toxic,
                                               std::span<const TokenSequence> llm_neutral,
                                               const LabelSet& labels, LlmNeutralHead llm_head) {
  std::vector<TrainingItem> batch;
  const auto fake = static_cast<std::size_t>(labels.fake_id());
  for (const auto& ex : real) {
    if (ex.label < 0 || ex.label >= labels.num_real_classes()) {
      throw ContractViolation("real example labeled outside neutral/toxic: id " +
                              std::to_string(ex.label));
    }
    batch.push_back({ex.seq, static_cast<std::size_t>(ex.label)});
  }
  for (const auto& per_class : fake_toxic) {
    for (const auto& seq : per_class) batch.push_back({seq, fake});
  }
  const std::size_t llm_target = llm_head == LlmNeutralHead::fake ? fake : 0;
  for (const auto& seq : llm_neutral) batch.push_back({seq, llm_target});
  return batch;
}

namespace {

std::vector<EmbeddingVector> embed_all(const Discriminator& d, std::span<const TrainingItem> batch) {
  std::vector<EmbeddingVector> out;
  out.reserve(batch.size());
  for (const auto& item : batch) out.push_back(d.features().embed(item.seq));
  return out;
}

std::vector<MlpClassifier::Item> as_items(std::span<const TrainingItem> batch,
                                          const std::vector<EmbeddingVector>& feats,
                                          std::size_t heads) {
  std::vector<MlpClassifier::Item> items;
  items.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].target >= heads) throw DomainError("discriminator target head out of range");
    items.push_back({feats[i].values, batch[i].target});
  }
  return items;
}

}  // namespace

double batch_loss(const Discriminator& d, std::span<const TrainingItem> batch) {
  const auto feats = embed_all(d, batch);
  const auto items = as_items(batch, feats, d.num_heads());
  return d.body().loss(items);
}

double train_step(Discriminator& d, std::span<const TrainingItem> batch, double lr) {
  if (batch.empty()) throw DomainError("discriminator step on an empty batch");
  const auto feats = embed_all(d, batch);
  const auto items = as_items(batch, feats, d.num_heads());
  auto grad = d.body().params().zeros_like();
  const double loss = d.body().loss(items, &grad);
  kernels::axpy(-lr, grad.flat(), d.body().params().flat());
  return loss;
}

std::uint64_t save_discriminator(const std::filesystem::path& path, const Discriminator& d,
                                 std::uint64_t vocab_hash) {
  std::vector<std::string> heads;
  for (int i = 0; i < d.labels().num_heads(); ++i) heads.push_back(d.labels().name_of(i));
  nlohmann::json meta{{"kind", "discriminator"},
                      {"vocab_hash", std::to_string(vocab_hash)},
                      {"K", d.labels().num_toxic()},
                      {"heads", heads},
                      {"feature_backend", d.features().name()},
                      {"feature_dim", d.features().dim()},
                      {"hidden", d.hidden()}};
  return write_checkpoint(path, meta, d.body().params());
}

void load_discriminator(const std::filesystem::path& path, Discriminator& d,
                        std::uint64_t vocab_hash) {
  auto ck = read_checkpoint(path);
  try {
    if (ck.meta.at("kind") != "discriminator") {
      throw LoadError("not a discriminator checkpoint: " + path.string());
    }
    if (ck.meta.at("vocab_hash").get<std::string>() != std::to_string(vocab_hash)) {
      throw LoadError("vocabulary hash mismatch for " + path.string());
    }
    if (ck.meta.at("K").get<int>() != d.labels().num_toxic()) {
      throw LoadError("discriminator head layout mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed discriminator metadata: ") + e.what());
  }
  if (!ck.params.same_layout(d.body().params())) {
    throw LoadError("discriminator parameter layout mismatch");
  }
  d.body().params() = std::move(ck.params);
}

}  // namespace toxigan
