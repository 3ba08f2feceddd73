#include "toxigan/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "toxigan/errors.hpp"
#include "toxigan/mlp.hpp"
#include "toxigan/optim.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t count) {
  if (truth >= classes_ || predicted >= classes_) throw DomainError("confusion index out of range");
  counts_[truth * classes_ + predicted] += count;
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

double ConfusionMatrix::precision(std::size_t c) const {
  std::size_t predicted = 0;
  for (std::size_t t = 0; t < classes_; ++t) predicted += at(t, c);
  return predicted == 0 ? 0.0 : static_cast<double>(at(c, c)) / static_cast<double>(predicted);
}

double ConfusionMatrix::recall(std::size_t c) const {
  std::size_t actual = 0;
  for (std::size_t p = 0; p < classes_; ++p) actual += at(c, p);
  return actual == 0 ? 0.0 : static_cast<double>(at(c, c)) / static_cast<double>(actual);
}

double ConfusionMatrix::f1(std::size_t c) const {
  const double p = precision(c), r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.classes() < 2) throw DomainError("macro-F1 needs at least two classes");
  if (cm.total() == 0) throw DomainError("macro-F1 of an empty confusion matrix");
  double s = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) s += cm.f1(c);
  return s / static_cast<double>(cm.classes());
}

double hate_f1(const ConfusionMatrix& cm, std::span<const std::size_t> hate_ids) {
  if (hate_ids.empty()) throw DomainError("hate-F1 needs at least one hate class");
  if (cm.total() == 0) throw DomainError("hate-F1 of an empty confusion matrix");
  double s = 0.0;
  for (std::size_t c : hate_ids) {
    if (c >= cm.classes()) throw DomainError("hate class id out of range");
    s += cm.f1(c);
  }
  return s / static_cast<double>(hate_ids.size());
}

double LexiconToxicityOracle::score(const TokenSequence& seq) const {
  if (seq.empty()) return 0.0;
  std::size_t hits = 0;
  for (TokenId t : seq) hits += lexicon_.count(t);
  return static_cast<double>(hits) / static_cast<double>(seq.size());
}

double avg_toxicity(std::span<const TokenSequence> texts, const ToxicityOracle& oracle) {
  if (texts.empty()) throw DomainError("average toxicity of an empty list");
  double s = 0.0;
  for (const auto& t : texts) s += oracle.score(t);
  return s / static_cast<double>(texts.size());
}

double avg_toxicity(const Corpus& corpus, const ToxicityOracle& oracle) {
  std::vector<TokenSequence> texts;
  texts.reserve(corpus.size());
  for (const auto& ex : corpus.examples()) texts.push_back(ex.seq);
  return avg_toxicity(texts, oracle);
}

DownstreamResult train_downstream(const Corpus& train, const Corpus& test,
                                  const EmbeddingBackend& phi, std::uint64_t seed,
                                  const DownstreamOptions& options) {
  if (!(train.labels() == test.labels())) throw SchemaError("train/test label spaces differ");
  const auto& labels = train.labels();
  const auto C = static_cast<std::size_t>(labels.num_real_classes());
  for (int c = 0; c < labels.num_real_classes(); ++c) {
    if (train.count(c) == 0) {
      throw ConfigError("class '" + labels.name_of(c) + "' absent from downstream training data");
    }
  }
  if (test.empty()) throw ConfigError("downstream test set is empty");

  auto featurize = [&](const Corpus& c) {
    std::vector<EmbeddingVector> out;
    out.reserve(c.size());
    for (const auto& ex : c.examples()) out.push_back(phi.embed(ex.seq));
    return out;
  };
  const auto train_x = featurize(train);
  const auto test_x = featurize(test);

  MlpClassifier model(phi.dim(), options.hidden, C, derive_seed(seed, 1));
  Adam adam;
  Rng rng(derive_seed(seed, 2));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  std::vector<MlpClassifier::Item> batch;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) {
        batch.push_back({train_x[order[i]].values, static_cast<std::size_t>(train[order[i]].label)});
      }
      auto grad = model.params().zeros_like();
      model.loss(batch, &grad);
      adam.step(model.params(), grad, options.lr);
    }
  }

  DownstreamResult res{ConfusionMatrix(C), 0.0, 0.0};
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto p = model.predict(test_x[i].values);
    const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    res.cm.add(static_cast<std::size_t>(test[i].label), pred);
  }
  std::vector<std::size_t> hate(C - 1);
  std::iota(hate.begin(), hate.end(), 1);
  res.macro_f1 = macro_f1(res.cm);
  res.hate_f1 = hate_f1(res.cm, hate);
  return res;
}

Corpus oversample_baseline(const Corpus& kept, const std::map<int, int>& budget,
                           std::uint64_t seed) {
  Rng rng(seed);
  Corpus out = kept;
  for (const auto& [label, n] : budget) {
    if (n <= 0) continue;
    if (label < 0 || label >= kept.labels().num_real_classes()) {
      throw ConfigError("oversampling budget for unknown label id " + std::to_string(label));
    }
    const auto& members = kept.class_indices(label);
    if (members.empty()) {
      throw ConfigError("cannot oversample empty class '" + kept.labels().name_of(label) + "'");
    }
    for (int i = 0; i < n; ++i) out.add(kept[members[rng.index(members.size())]]);
  }
  return out;
}

}  // namespace toxigan
