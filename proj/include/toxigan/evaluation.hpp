#pragma once
// Downstream metrics, the lexicon toxicity oracle, the reference
// classifier and the oversampling baseline.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "toxigan/corpus.hpp"
#include "toxigan/embedding.hpp"

namespace toxigan {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  void add(std::size_t truth, std::size_t predicted, std::size_t count = 1);
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  std::size_t classes() const { return classes_; }
  std::size_t total() const;

  /// Zero when the denominator is zero.
  double precision(std::size_t c) const;
  double recall(std::size_t c) const;
  /// 2PR/(P+R); zero when P+R = 0.
  double f1(std::size_t c) const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

/// Unweighted mean of per-class F1. DomainError when C < 2 or the matrix is
/// empty.
double macro_f1(const ConfusionMatrix& cm);

/// Mean per-class F1 over `hate_ids` only. DomainError when empty or out of
/// range.
double hate_f1(const ConfusionMatrix& cm, std::span<const std::size_t> hate_ids);

class ToxicityOracle {
 public:
  virtual ~ToxicityOracle() = default;
  /// Score in [0, 1].
  virtual double score(const TokenSequence& seq) const = 0;
};

/// Fraction of tokens that belong to the toxic lexicon.
class LexiconToxicityOracle final : public ToxicityOracle {
 public:
  explicit LexiconToxicityOracle(std::set<TokenId> lexicon) : lexicon_(std::move(lexicon)) {}
  double score(const TokenSequence& seq) const override;

 private:
  std::set<TokenId> lexicon_;
};

/// Arithmetic mean of per-text scores. DomainError when empty.
double avg_toxicity(std::span<const TokenSequence> texts, const ToxicityOracle& oracle);
double avg_toxicity(const Corpus& corpus, const ToxicityOracle& oracle);

struct DownstreamOptions {
  std::size_t hidden = 32;
  std::size_t epochs = 60;
  double lr = 0.01;
  std::size_t batch_size = 32;
};

struct DownstreamResult {
  ConfusionMatrix cm{2};
  double macro_f1 = 0.0;
  double hate_f1 = 0.0;
};

/// Fits a fresh reference classifier (the discriminator's architecture
/// without the fake head) on `train` and scores it on `test`. Hate-F1 is
/// taken over every toxic class. ConfigError when a class is missing from
/// `train`.
DownstreamResult train_downstream(const Corpus& train, const Corpus& test,
                                  const EmbeddingBackend& phi, std::uint64_t seed,
                                  const DownstreamOptions& options = {});

/// Appends budget[c] seeded duplicates (with replacement) of kept's class-c
/// examples, class by class in label order. ConfigError for a positive
/// budget on an empty class.
Corpus oversample_baseline(const Corpus& kept, const std::map<int, int>& budget,
                           std::uint64_t seed);

}  // namespace toxigan
