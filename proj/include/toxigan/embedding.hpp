#pragma once
// Sentence embedding function and cosine geometry.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "toxigan/corpus.hpp"
#include "toxigan/http.hpp"

namespace toxigan {

struct EmbeddingVector {
  std::vector<double> values;
  double norm = 0.0;

  static EmbeddingVector from(std::vector<double> values);
  std::size_t dim() const { return values.size(); }
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual bool deterministic() const = 0;
  /// DomainError on an empty sequence.
  virtual EmbeddingVector embed(const TokenSequence& seq) const = 0;
};

/// Offline default: every token id owns a fixed pseudorandom Gaussian vector
/// (seeded per id); a sequence embeds to the length-normalized mean of its
/// token vectors. Order-invariant by construction.
class HashBagBackend final : public EmbeddingBackend {
 public:
  HashBagBackend(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

  std::string name() const override { return "hash_bag"; }
  std::size_t dim() const override { return dim_; }
  bool deterministic() const override { return true; }
  EmbeddingVector embed(const TokenSequence& seq) const override;

  std::span<const double> token_vector(TokenId t) const;

 private:
  std::size_t vocab_size_;
  std::size_t dim_;
  std::vector<double> table_;
};

/// Adapter for an embeddings HTTP service. Sequences are detokenized through
/// the run vocabulary and sent as {"model", "input": [text]}; the reply is
/// read from data[0].embedding.
class RemoteEmbeddingBackend final : public EmbeddingBackend {
 public:
  RemoteEmbeddingBackend(std::shared_ptr<const Vocabulary> vocab, HttpEndpoint endpoint,
                         std::string model, std::size_t dim);

  std::string name() const override { return "remote"; }
  std::size_t dim() const override { return dim_; }
  bool deterministic() const override { return false; }
  EmbeddingVector embed(const TokenSequence& seq) const override;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  HttpEndpoint endpoint_;
  std::string model_;
  std::size_t dim_;
};

/// dot(u, v) / (|u||v|), clamped to [-1, 1].
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// StateError on an empty pool.
double max_cosine_to_pool(const EmbeddingVector& q, std::span<const EmbeddingVector> pool);

}  // namespace toxigan
