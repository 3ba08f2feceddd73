#include "toxigan/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "toxigan/errors.hpp"

namespace toxigan {

VarianceReport variance_decomposition(std::span<const double> r_tox,
                                      std::span<const double> r_auth, double alpha, double beta) {
  if (r_tox.size() != r_auth.size()) throw DomainError("reward samples differ in length");
  if (r_tox.size() < 2) throw DomainError("variance needs at least two samples");
  const double n = static_cast<double>(r_tox.size());
  double mt = 0.0, ma = 0.0;
  for (std::size_t i = 0; i < r_tox.size(); ++i) {
    mt += r_tox[i];
    ma += r_auth[i];
  }
  mt /= n;
  ma /= n;
  VarianceReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  const double mj = alpha * mt + beta * ma;
  for (std::size_t i = 0; i < r_tox.size(); ++i) {
    const double dt = r_tox[i] - mt, da = r_auth[i] - ma;
    rep.var_tox += dt * dt;
    rep.var_auth += da * da;
    rep.cov += dt * da;
    const double dj = alpha * r_tox[i] + beta * r_auth[i] - mj;
    rep.var_joint_direct += dj * dj;
  }
  rep.var_tox /= n;
  rep.var_auth /= n;
  rep.cov /= n;
  rep.var_joint_direct /= n;
  rep.var_joint_decomposed = alpha * alpha * rep.var_tox + beta * beta * rep.var_auth +
                             2.0 * alpha * beta * rep.cov;
  return rep;
}

std::vector<TokenSequence> enumerate_sequences(const GeneratorShape& shape, std::size_t limit) {
  std::vector<TokenId> alphabet;
  for (TokenId t = 0; t < shape.vocab_size; ++t) {
    if (!shape.end_token || t != *shape.end_token) alphabet.push_back(t);
  }
  // Fixed length max_len without an end token; 1..max_len with one.
  const std::size_t min_len = shape.end_token ? 1 : shape.max_len;
  double count = 0.0;
  for (std::size_t len = min_len; len <= shape.max_len; ++len) {
    count += std::pow(static_cast<double>(alphabet.size()), static_cast<double>(len));
  }
  if (count > static_cast<double>(limit)) {
    throw DomainError("state space of " + std::to_string(static_cast<long long>(count)) +
                      " sequences exceeds the enumeration bound " + std::to_string(limit));
  }
  std::vector<TokenSequence> out;
  for (std::size_t len = min_len; len <= shape.max_len; ++len) {
    std::vector<std::size_t> digits(len, 0);
    while (true) {
      TokenSequence seq(len);
      for (std::size_t i = 0; i < len; ++i) seq[i] = alphabet[digits[i]];
      out.push_back(std::move(seq));
      std::size_t pos = len;
      while (pos > 0 && ++digits[pos - 1] == alphabet.size()) digits[--pos] = 0;
      if (pos == 0) break;
    }
  }
  return out;
}

double expected_reward(const Generator& g, const RewardFn& reward, const NoiseVector& z) {
  double total = 0.0;
  for (const auto& seq : enumerate_sequences(g.shape())) {
    total += std::exp(g.log_prob(z, seq)) * reward(seq);
  }
  return total;
}

ParameterSet exact_pg_gradient(const Generator& g, const RewardFn& reward, const NoiseVector& z) {
  auto grad = g.params().zeros_like();
  for (const auto& seq : enumerate_sequences(g.shape())) {
    const double r = reward(seq);
    if (r == 0.0) continue;
    const double p = std::exp(g.log_prob(z, seq));
    g.accumulate_log_prob_grad(z, seq, p * r, grad);
  }
  return grad;
}

ParameterSet finite_difference_gradient(const Generator& g, const RewardFn& reward,
                                        const NoiseVector& z, double step) {
  Generator probe = g;
  auto grad = g.params().zeros_like();
  auto theta = probe.params().flat();
  auto out = grad.flat();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + step;
    const double up = expected_reward(probe, reward, z);
    theta[i] = orig - step;
    const double down = expected_reward(probe, reward, z);
    theta[i] = orig;
    out[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::vector<double> running_minimum(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(out.empty() ? v : std::min(out.back(), v));
  return out;
}

ConvergenceCurve convergence_curve(const TrainLog& log) {
  if (log.records.empty()) throw DomainError("convergence curve of an empty log");
  std::map<std::pair<int, int>, ConvergenceSeries> by_key;
  for (const auto& r : log.records) {
    auto& s = by_key[{r.class_id, static_cast<int>(r.kind)}];
    s.class_id = r.class_id;
    s.kind = r.kind;
    s.epochs.push_back(r.epoch);
    s.grad_norm_sq.push_back(r.grad_norm * r.grad_norm);
  }
  ConvergenceCurve curve;
  for (auto& [key, s] : by_key) {
    s.running_min = running_minimum(s.grad_norm_sq);
    curve.series.push_back(std::move(s));
  }
  return curve;
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceCurve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "class,step_kind,epoch,grad_norm_sq,running_min\n";
  char buf[128];
  for (const auto& s : curve.series) {
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%.17g\n", s.class_id,
                    step_kind_name(s.kind), s.epochs[i], s.grad_norm_sq[i], s.running_min[i]);
      out << buf;
    }
  }
}

}  // namespace toxigan
