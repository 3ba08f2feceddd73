#include "toxigan/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "toxigan/errors.hpp"
#include "toxigan/kernels.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

EmbeddingVector EmbeddingVector::from(std::vector<double> values) {
  EmbeddingVector v;
  v.norm = std::sqrt(kernels::dot(values, values));
  v.values = std::move(values);
  return v;
}

HashBagBackend::HashBagBackend(std::size_t vocab_size, std::size_t dim, std::uint64_t seed)
    : vocab_size_(vocab_size), dim_(dim), table_(vocab_size * dim) {
  if (dim < 2) throw ConfigError("embedding dim must be >= 2");
  for (std::size_t t = 0; t < vocab_size; ++t) {
    Rng rng(derive_seed(seed, t));
    const auto row = rng.normal_vector(dim);
    std::copy(row.begin(), row.end(), table_.begin() + static_cast<std::ptrdiff_t>(t * dim));
  }
}

std::span<const double> HashBagBackend::token_vector(TokenId t) const {
  if (t >= vocab_size_) throw DomainError("token id outside embedding table: " + std::to_string(t));
  return {table_.data() + t * dim_, dim_};
}

EmbeddingVector HashBagBackend::embed(const TokenSequence& seq) const {
  if (seq.empty()) throw DomainError("cannot embed an empty sequence");
  std::vector<double> acc(dim_, 0.0);
  for (TokenId t : seq) kernels::axpy(1.0, token_vector(t), acc);
  const double n = std::sqrt(kernels::dot(acc, acc));
  if (n == 0.0) throw DomainError("degenerate embedding (zero norm)");
  for (auto& x : acc) x /= n;
  return EmbeddingVector::from(std::move(acc));
}

RemoteEmbeddingBackend::RemoteEmbeddingBackend(std::shared_ptr<const Vocabulary> vocab,
                                               HttpEndpoint endpoint, std::string model,
                                               std::size_t dim)
    : vocab_(std::move(vocab)), endpoint_(std::move(endpoint)), model_(std::move(model)),
      dim_(dim) {}

EmbeddingVector RemoteEmbeddingBackend::embed(const TokenSequence& seq) const {
  if (seq.empty()) throw DomainError("cannot embed an empty sequence");
  std::string text;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) text += ' ';
    text += vocab_->token(seq[i]);
  }
  const auto reply = post_json(endpoint_, {{"model", model_}, {"input", {text}}});
  std::vector<double> values;
  try {
    values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed embedding reply: ") + e.what());
  }
  if (values.size() != dim_) {
    throw StateError("remote embedding has dim " + std::to_string(values.size()) +
                     ", expected " + std::to_string(dim_));
  }
  return EmbeddingVector::from(std::move(values));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw DomainError("cosine of vectors with different dimensions");
  if (u.norm <= 0.0 || v.norm <= 0.0) throw DomainError("cosine of a zero-norm vector");
  const double c = kernels::dot(u.values, v.values) / (u.norm * v.norm);
  return std::clamp(c, -1.0, 1.0);
}

double max_cosine_to_pool(const EmbeddingVector& q, std::span<const EmbeddingVector> pool) {
  if (pool.empty()) throw StateError("max cosine over an empty ballast pool");
  double best = -1.0;
  for (const auto& p : pool) best = std::max(best, cosine(q, p));
  return best;
}

}  // namespace toxigan
