#include "toxigan/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "toxigan/errors.hpp"
#include "toxigan/kernels.hpp"
#include "toxigan/optim.hpp"

namespace toxigan {
namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Log-softmax of `logits` into `out`; entry `masked` (if any) gets -inf.
void log_softmax(std::span<const double> logits, std::optional<std::size_t> masked,
                 std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != masked) mx = std::max(mx, logits[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != masked) sum += std::exp(logits[k] - mx);
  }
  const double lse = mx + std::log(sum);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = k == masked ? -std::numeric_limits<double>::infinity() : logits[k] - lse;
  }
}

}  // namespace

struct Generator::StepCache {
  std::size_t input_row;         // embedding row fed at this step
  std::vector<double> h_prev, c_prev;
  std::vector<double> gi, gf, gg, go;  // gate activations
  std::vector<double> c, tanh_c, h;
  std::vector<double> logp;      // log-softmax over vocab
  std::optional<TokenId> target;  // token scored at this step
};

Generator::Generator(int class_id, GeneratorShape shape, std::uint64_t init_seed)
    : class_id_(class_id), shape_(shape) {
  if (shape_.vocab_size < 2) throw ConfigError("generator vocabulary must have >= 2 tokens");
  if (shape_.hidden < 1 || shape_.embed_dim < 1) throw ConfigError("generator sizes must be >= 1");
  if (shape_.max_len < 1) throw ConfigError("generator max_len must be >= 1");
  if (shape_.end_token && *shape_.end_token >= shape_.vocab_size) {
    throw ConfigError("end token outside vocabulary");
  }
  const std::size_t V = shape_.vocab_size, E = shape_.embed_dim, H = shape_.hidden;
  at_.embedding = params_.add("embedding", V + 1, E);
  at_.wx = params_.add("lstm_wx", 4 * H, E);
  at_.wh = params_.add("lstm_wh", 4 * H, H);
  at_.bias = params_.add("lstm_b", 4 * H, 1);
  at_.out_w = params_.add("out_w", V, H);
  at_.out_b = params_.add("out_b", V, 1);

  Rng rng(init_seed);
  auto fill = [&](std::size_t id, double stddev) {
    const auto w = rng.normal_vector(params_.tensor(id).size(), stddev);
    std::copy(w.begin(), w.end(), params_.tensor(id).begin());
  };
  fill(at_.embedding, 0.1);
  fill(at_.wx, 1.0 / std::sqrt(static_cast<double>(E)));
  fill(at_.wh, 1.0 / std::sqrt(static_cast<double>(H)));
  fill(at_.out_w, 0.1);
  auto b = params_.tensor(at_.bias);
  for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;  // forget gate
}

NoiseVector Generator::draw_noise(Rng& rng) const { return {rng.normal_vector(shape_.hidden)}; }

void Generator::validate(const TokenSequence& seq) const {
  if (seq.empty()) throw DomainError("generators never emit an empty sequence");
  if (seq.size() > shape_.max_len) {
    throw DomainError("sequence longer than generator max_len");
  }
  for (TokenId t : seq) {
    if (t >= shape_.vocab_size) throw DomainError("token id outside generator vocabulary");
    if (shape_.end_token && t == *shape_.end_token) {
      throw DomainError("end token inside a generated sequence");
    }
  }
}

std::size_t Generator::num_steps(const TokenSequence& seq) const {
  const bool terminated = shape_.end_token && seq.size() < shape_.max_len;
  return seq.size() + (terminated ? 1 : 0);
}

std::vector<Generator::StepCache> Generator::forward(const NoiseVector& z,
                                                     const TokenSequence& seq) const {
  const std::size_t V = shape_.vocab_size, E = shape_.embed_dim, H = shape_.hidden;
  if (z.values.size() != H) throw DomainError("noise dimension must equal hidden size");
  const auto emb = params_.tensor(at_.embedding);
  const auto wx = params_.tensor(at_.wx);
  const auto wh = params_.tensor(at_.wh);
  const auto bias = params_.tensor(at_.bias);
  const auto out_w = params_.tensor(at_.out_w);
  const auto out_b = params_.tensor(at_.out_b);

  const std::size_t steps = num_steps(seq);
  std::vector<StepCache> caches(steps);
  std::vector<double> h = z.values, c(H, 0.0), a(4 * H), logits(V);
  for (std::size_t t = 0; t < steps; ++t) {
    auto& s = caches[t];
    s.input_row = t == 0 ? V : seq[t - 1];
    s.h_prev = h;
    s.c_prev = c;
    const double* x = emb.data() + s.input_row * E;
    std::copy(bias.begin(), bias.end(), a.begin());
    kernels::gemv(wx.data(), 4 * H, E, x, a.data(), true);
    kernels::gemv(wh.data(), 4 * H, H, h.data(), a.data(), true);
    s.gi.resize(H); s.gf.resize(H); s.gg.resize(H); s.go.resize(H);
    s.c.resize(H); s.tanh_c.resize(H); s.h.resize(H);
    for (std::size_t j = 0; j < H; ++j) {
      s.gi[j] = sigmoid(a[j]);
      s.gf[j] = sigmoid(a[H + j]);
      s.gg[j] = std::tanh(a[2 * H + j]);
      s.go[j] = sigmoid(a[3 * H + j]);
      s.c[j] = s.gf[j] * c[j] + s.gi[j] * s.gg[j];
      s.tanh_c[j] = std::tanh(s.c[j]);
      s.h[j] = s.go[j] * s.tanh_c[j];
    }
    std::copy(out_b.begin(), out_b.end(), logits.begin());
    kernels::gemv(out_w.data(), V, H, s.h.data(), logits.data(), true);
    s.logp.resize(V);
    std::optional<std::size_t> masked;
    if (t == 0 && shape_.end_token) masked = *shape_.end_token;
    log_softmax(logits, masked, s.logp);
    if (t < seq.size()) {
      s.target = seq[t];
    } else if (shape_.end_token) {
      s.target = *shape_.end_token;
    }
    h = s.h;
    c = s.c;
  }
  return caches;
}

GenerationSample Generator::sample(const NoiseVector& z, Rng& rng) const {
  // Incremental forward: extend the prefix one token at a time reusing the
  // recurrent state rather than re-running forward() per step.
  const std::size_t V = shape_.vocab_size, E = shape_.embed_dim, H = shape_.hidden;
  if (z.values.size() != H) throw DomainError("noise dimension must equal hidden size");
  const auto emb = params_.tensor(at_.embedding);
  const auto wx = params_.tensor(at_.wx);
  const auto wh = params_.tensor(at_.wh);
  const auto bias = params_.tensor(at_.bias);
  const auto out_w = params_.tensor(at_.out_w);
  const auto out_b = params_.tensor(at_.out_b);

  GenerationSample out;
  out.z = z;
  std::vector<double> h = z.values, c(H, 0.0), a(4 * H), logits(V), logp(V);
  std::size_t input_row = V;
  for (std::size_t t = 0; t < shape_.max_len; ++t) {
    std::copy(bias.begin(), bias.end(), a.begin());
    kernels::gemv(wx.data(), 4 * H, E, emb.data() + input_row * E, a.data(), true);
    kernels::gemv(wh.data(), 4 * H, H, h.data(), a.data(), true);
    for (std::size_t j = 0; j < H; ++j) {
      const double gi = sigmoid(a[j]);
      const double gf = sigmoid(a[H + j]);
      const double gg = std::tanh(a[2 * H + j]);
      const double go = sigmoid(a[3 * H + j]);
      c[j] = gf * c[j] + gi * gg;
      h[j] = go * std::tanh(c[j]);
    }
    std::copy(out_b.begin(), out_b.end(), logits.begin());
    kernels::gemv(out_w.data(), V, H, h.data(), logits.data(), true);
    std::optional<std::size_t> masked;
    if (t == 0 && shape_.end_token) masked = *shape_.end_token;
    log_softmax(logits, masked, logp);

    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = V;
    std::size_t last_valid = 0;
    for (std::size_t k = 0; k < V; ++k) {
      if (k == masked) continue;
      last_valid = k;
      cum += std::exp(logp[k]);
      if (u < cum) {
        pick = k;
        break;
      }
    }
    if (pick == V) pick = last_valid;  // rounding slack at the top of the CDF
    out.step_logprobs.push_back(logp[pick]);
    if (shape_.end_token && pick == *shape_.end_token) break;
    out.seq.push_back(static_cast<TokenId>(pick));
    input_row = pick;
  }
  out.total_logprob = std::accumulate(out.step_logprobs.begin(), out.step_logprobs.end(), 0.0);
  return out;
}

double Generator::log_prob(const NoiseVector& z, const TokenSequence& seq) const {
  validate(seq);
  const auto caches = forward(z, seq);
  double total = 0.0;
  for (const auto& s : caches) total += s.logp[*s.target];
  return total;
}

std::vector<std::vector<double>> Generator::step_distributions(const NoiseVector& z,
                                                               const TokenSequence& seq) const {
  validate(seq);
  std::vector<std::vector<double>> out;
  for (const auto& s : forward(z, seq)) {
    std::vector<double> p(s.logp.size());
    std::transform(s.logp.begin(), s.logp.end(), p.begin(), [](double l) { return std::exp(l); });
    out.push_back(std::move(p));
  }
  return out;
}

double Generator::accumulate_log_prob_grad(const NoiseVector& z, const TokenSequence& seq,
                                           double coef, ParameterSet& grad) const {
  validate(seq);
  if (!grad.same_layout(params_)) throw DomainError("gradient layout mismatch");
  const std::size_t V = shape_.vocab_size, E = shape_.embed_dim, H = shape_.hidden;
  const auto caches = forward(z, seq);
  double total = 0.0;
  for (const auto& s : caches) total += s.logp[*s.target];
  if (coef == 0.0) return total;

  const auto wx = params_.tensor(at_.wx);
  const auto wh = params_.tensor(at_.wh);
  const auto out_w = params_.tensor(at_.out_w);
  auto d_emb = grad.tensor(at_.embedding);
  auto d_wx = grad.tensor(at_.wx);
  auto d_wh = grad.tensor(at_.wh);
  auto d_b = grad.tensor(at_.bias);
  auto d_ow = grad.tensor(at_.out_w);
  auto d_ob = grad.tensor(at_.out_b);

  std::vector<double> dlogits(V), dh(H), dc(H), dh_next(H, 0.0), dc_next(H, 0.0), da(4 * H);
  for (std::size_t t = caches.size(); t-- > 0;) {
    const auto& s = caches[t];
    for (std::size_t k = 0; k < V; ++k) dlogits[k] = -coef * std::exp(s.logp[k]);
    dlogits[*s.target] += coef;
    kernels::ger(1.0, dlogits.data(), V, s.h.data(), H, d_ow.data());
    kernels::axpy(1.0, dlogits, d_ob);
    dh = dh_next;
    kernels::gemv_t(out_w.data(), V, H, dlogits.data(), dh.data());
    for (std::size_t j = 0; j < H; ++j) {
      const double d_o = dh[j] * s.tanh_c[j];
      dc[j] = dh[j] * s.go[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]) + dc_next[j];
      const double d_i = dc[j] * s.gg[j];
      const double d_g = dc[j] * s.gi[j];
      const double d_f = dc[j] * s.c_prev[j];
      dc_next[j] = dc[j] * s.gf[j];
      da[j] = d_i * s.gi[j] * (1.0 - s.gi[j]);
      da[H + j] = d_f * s.gf[j] * (1.0 - s.gf[j]);
      da[2 * H + j] = d_g * (1.0 - s.gg[j] * s.gg[j]);
      da[3 * H + j] = d_o * s.go[j] * (1.0 - s.go[j]);
    }
    const double* x = params_.tensor(at_.embedding).data() + s.input_row * E;
    kernels::ger(1.0, da.data(), 4 * H, x, E, d_wx.data());
    kernels::ger(1.0, da.data(), 4 * H, s.h_prev.data(), H, d_wh.data());
    kernels::axpy(1.0, da, d_b);
    kernels::gemv_t(wx.data(), 4 * H, E, da.data(), d_emb.data() + s.input_row * E);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    kernels::gemv_t(wh.data(), 4 * H, H, da.data(), dh_next.data());
  }
  return total;
}

MleReport mle_pretrain(Generator& g, const Corpus& data, const MleOptions& options) {
  if (data.empty()) throw ConfigError("MLE pretraining needs at least one example");
  for (const auto& ex : data.examples()) {
    if (ex.label != g.class_id()) {
      throw ConfigError("MLE data for class " + std::to_string(g.class_id()) +
                        " contains label " + std::to_string(ex.label));
    }
  }
  const std::size_t max_len = g.shape().max_len;
  std::vector<TokenSequence> seqs;
  for (const auto& ex : data.examples()) {
    TokenSequence s(ex.seq.begin(), ex.seq.begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(max_len, ex.seq.size())));
    seqs.push_back(std::move(s));
  }

  MleReport report;
  Rng rng(options.seed);
  Adam adam;
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) batch_tokens += g.num_steps(seqs[order[i]]);
      auto grad = g.params().zeros_like();
      // Gradient of the loss (-log P), normalized per predicted token.
      const double coef = -1.0 / static_cast<double>(batch_tokens);
      for (std::size_t i = start; i < end; ++i) {
        const auto z = g.draw_noise(rng);
        nll -= g.accumulate_log_prob_grad(z, seqs[order[i]], coef, grad);
      }
      tokens += batch_tokens;
      clip_norm(grad, options.clip_norm);
      adam.step(g.params(), grad, options.lr);
    }
    report.epoch_nll.push_back(nll / static_cast<double>(tokens));
  }
  return report;
}

double mean_nll(const Generator& g, const Corpus& data, Rng& rng) {
  if (data.empty()) throw DomainError("mean NLL of an empty corpus");
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : data.examples()) {
    const auto n = std::min(g.shape().max_len, ex.seq.size());
    TokenSequence s(ex.seq.begin(), ex.seq.begin() + static_cast<std::ptrdiff_t>(n));
    nll -= g.log_prob(g.draw_noise(rng), s);
    tokens += g.num_steps(s);
  }
  return nll / static_cast<double>(tokens);
}

ParameterSet score_gradient(const Generator& g,
                            std::span<const std::pair<const GenerationSample*, double>> terms) {
  auto grad = g.params().zeros_like();
  for (const auto& [sample, coef] : terms) {
    g.accumulate_log_prob_grad(sample->z, sample->seq, coef, grad);
  }
  return grad;
}

double reinforce_update(Generator& g, std::span<const ScoredSample> batch, double lr,
                        double r_max) {
  if (batch.empty()) throw DomainError("REINFORCE update on an empty batch");
  for (const auto& item : batch) {
    if (!std::isfinite(item.reward) || item.reward < 0.0 || item.reward > r_max) {
      throw ContractViolation("reward outside [0, " + std::to_string(r_max) +
                              "]: " + std::to_string(item.reward));
    }
  }
  std::vector<std::pair<const GenerationSample*, double>> terms;
  terms.reserve(batch.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& item : batch) terms.emplace_back(&item.sample, item.reward * inv_n);
  const auto grad = score_gradient(g, terms);
  kernels::axpy(lr, grad.flat(), g.params().flat());
  return grad.norm();
}

std::uint64_t save_generator(const std::filesystem::path& path, const Generator& g,
                             std::uint64_t vocab_hash) {
  const auto& s = g.shape();
  nlohmann::json meta{{"kind", "generator"},
                      {"class_id", g.class_id()},
                      {"vocab_hash", std::to_string(vocab_hash)},
                      {"vocab_size", s.vocab_size},
                      {"embed_dim", s.embed_dim},
                      {"hidden", s.hidden},
                      {"max_len", s.max_len},
                      {"end_token", s.end_token ? nlohmann::json(*s.end_token) : nlohmann::json()}};
  return write_checkpoint(path, meta, g.params());
}

Generator load_generator(const std::filesystem::path& path, std::uint64_t vocab_hash) {
  auto ck = read_checkpoint(path);
  const auto& m = ck.meta;
  try {
    if (m.at("kind") != "generator") throw LoadError("not a generator checkpoint: " + path.string());
    if (m.at("vocab_hash").get<std::string>() != std::to_string(vocab_hash)) {
      throw LoadError("vocabulary hash mismatch for " + path.string());
    }
    GeneratorShape shape;
    shape.vocab_size = m.at("vocab_size");
    shape.embed_dim = m.at("embed_dim");
    shape.hidden = m.at("hidden");
    shape.max_len = m.at("max_len");
    if (!m.at("end_token").is_null()) shape.end_token = m.at("end_token").get<TokenId>();
    Generator g(m.at("class_id").get<int>(), shape, 0);
    if (!ck.params.same_layout(g.params())) throw LoadError("generator parameter layout mismatch");
    g.params() = std::move(ck.params);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed generator metadata: ") + e.what());
  }
}

}  // namespace toxigan
