#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "toxigan/diagnostics.hpp"
#include "toxigan/errors.hpp"

using namespace toxigan;

namespace {

double relative_error(const ParameterSet& a, const ParameterSet& b) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += std::pow(a.flat()[i] - b.flat()[i], 2);
    scale += std::pow(b.flat()[i], 2);
  }
  return std::sqrt(diff) / std::max(1e-12, std::sqrt(scale));
}

double population_variance(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m += v / x.size();
  double s = 0;
  for (double v : x) s += (v - m) * (v - m) / x.size();
  return s;
}

}  // namespace

TEST_CASE("variance decomposition") {
  Rng rng(3);
  std::vector<double> a(100), b(100);
  for (auto& x : a) x = rng.uniform();
  for (auto& x : b) x = rng.uniform();

  const auto same = variance_decomposition(a, a, 0.5, 0.5);
  CHECK(std::abs(same.var_joint_direct - population_variance(a)) <= 1e-12);

  std::vector<double> mirrored(100);
  for (std::size_t i = 0; i < 100; ++i) mirrored[i] = 0.7 - a[i];
  const auto cancel = variance_decomposition(a, mirrored, 0.5, 0.5);
  CHECK(std::abs(cancel.var_joint_direct) <= 1e-12);
  CHECK(std::abs(cancel.var_joint_decomposed) <= 1e-12);

  const auto r = variance_decomposition(a, b, 0.3, 0.7);
  std::vector<double> joint(100);
  for (std::size_t i = 0; i < 100; ++i) joint[i] = 0.3 * a[i] + 0.7 * b[i];
  CHECK(std::abs(r.var_joint_direct - population_variance(joint)) <= 1e-12);
  CHECK(std::abs(r.var_joint_direct - r.var_joint_decomposed) <= 1e-9);
  CHECK(r.var_tox == doctest::Approx(population_variance(a)));
  CHECK(r.var_auth == doctest::Approx(population_variance(b)));

  CHECK_THROWS_AS(variance_decomposition(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.5, 0.5),
                  DomainError);
  CHECK_THROWS_AS(variance_decomposition(a, std::vector<double>{1.0, 2.0}, 0.5, 0.5), DomainError);
}

TEST_CASE("enumeration covers the sequence space and refuses large ones") {
  GeneratorShape fixed{3, 2, 2, 2, std::nullopt};
  CHECK(enumerate_sequences(fixed).size() == 9);
  GeneratorShape ended{4, 2, 2, 3, TokenId{2}};
  const auto seqs = enumerate_sequences(ended);
  CHECK(seqs.size() == 3 + 9 + 27);
  CHECK(seqs.front() == TokenSequence{0});
  GeneratorShape big{20, 2, 2, 4, std::nullopt};
  CHECK_THROWS_AS(enumerate_sequences(big), DomainError);
}

TEST_CASE("exact policy gradient") {
  auto g = testing::tiny_generator(3, 2, 4, 17);
  Rng rng(9);
  const auto z = g.draw_noise(rng);

  const RewardFn zero = [](const TokenSequence&) { return 0.0; };
  CHECK(exact_pg_gradient(g, zero, z).norm() <= 1e-9);

  const RewardFn constant = [](const TokenSequence&) { return 0.8; };
  CHECK(exact_pg_gradient(g, constant, z).norm() <= 1e-9);

  const TokenSequence star{2, 1};
  const RewardFn indicator = [&](const TokenSequence& s) { return s == star ? 1.0 : 0.0; };
  auto single = g.params().zeros_like();
  const double lp = g.accumulate_log_prob_grad(z, star, 1.0, single);
  for (auto& x : single.flat()) x *= std::exp(lp);
  CHECK(relative_error(exact_pg_gradient(g, indicator, z), single) <= 1e-12);

  const RewardFn shaped = [](const TokenSequence& s) { return 0.1 * s[0] + 0.4 * (s[1] == 0); };
  CHECK(relative_error(exact_pg_gradient(g, shaped, z), finite_difference_gradient(g, shaped, z)) <=
        1e-4);

  GeneratorShape ended{4, 3, 4, 3, TokenId{2}};
  Generator h(1, ended, 5);
  const auto zh = h.draw_noise(rng);
  const RewardFn by_length = [](const TokenSequence& s) { return s.size() / 3.0; };
  CHECK(relative_error(exact_pg_gradient(h, by_length, zh), finite_difference_gradient(h, by_length, zh)) <=
        1e-4);
  double total = 0;
  const RewardFn one = [](const TokenSequence&) { return 1.0; };
  total = expected_reward(h, one, zh);
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("running minimum") {
  CHECK(running_minimum(std::vector<double>{4, 1, 9}) == std::vector<double>{4, 1, 1});
  CHECK(running_minimum(std::vector<double>{2, 2, 2}) == std::vector<double>{2, 2, 2});
  CHECK(running_minimum(std::vector<double>{}).empty());
}

TEST_CASE("convergence curve splits series by class and step kind") {
  TrainLog log;
  for (int epoch = 1; epoch <= 8; ++epoch) {
    for (int k = 1; k <= 2; ++k) {
      TrainRecord r;
      r.epoch = epoch;
      r.class_id = k;
      r.kind = step_kind_for(epoch);
      r.grad_norm = 1.0 + ((epoch * 7 + k) % 5);
      log.records.push_back(r);
    }
  }
  const auto curve = convergence_curve(log);
  REQUIRE(curve.series.size() == 4);
  for (const auto& s : curve.series) {
    CHECK(s.epochs.size() == 4);
    for (int e : s.epochs) CHECK(step_kind_for(e) == s.kind);
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      const auto it = std::find_if(log.records.begin(), log.records.end(), [&](const TrainRecord& r) {
        return r.epoch == s.epochs[i] && r.class_id == s.class_id;
      });
      CHECK(s.grad_norm_sq[i] == doctest::Approx(it->grad_norm * it->grad_norm));
      if (i > 0) CHECK(s.running_min[i] <= s.running_min[i - 1]);
    }
  }
  CHECK_THROWS_AS(convergence_curve(TrainLog{}), DomainError);

  testing::TempDir dir;
  write_convergence_csv(dir / "c.csv", curve);
  const std::string csv = testing::read_file(dir / "c.csv");
  CHECK(csv.rfind("class,step_kind,epoch,grad_norm_sq,running_min\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}

TEST_CASE("train log CSV round-trips") {
  TrainLog log;
  log.records.push_back({1, 1, StepKind::toxicity, 0.5, 1.25, 0.75, 100, 0.25, 3.0});
  log.records.push_back({2, 2, StepKind::authenticity, 0.125, 1.0, 2.0, 90, 0.5, 1.0});
  testing::TempDir dir;
  write_train_log(dir / "t.csv", log);
  const auto back = read_train_log(dir / "t.csv");
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].kind == StepKind::authenticity);
  CHECK(back.records[1].ballast_size == 90);
  CHECK(back.records[0].d_loss == 1.25);
  CHECK(train_log_csv(back) == train_log_csv(log));
  CHECK(train_log_csv(log).rfind("epoch,class,step_kind,g_loss,d_loss,grad_norm,ballast_size,reward_mean\n", 0) == 0);
}
