#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "toxigan/errors.hpp"
#include "toxigan/evaluation.hpp"
#include "toxigan/experiment.hpp"
#include "toxigan/trainer.hpp"

using namespace toxigan;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(TrainMode mode = TrainMode::full, int epochs = 6) {
  nlohmann::json j{{"output_dir", "unused"},
                   {"data", {{"source", "synthetic"}, {"n_per_class", 200}}},
                   {"generator", {{"pretrain_epochs", 3}, {"batch", 24}}},
                   {"ballast", {{"target_size", 10}}},
                   {"train", {{"mode", train_mode_name(mode)}, {"max_epoch", epochs}}}};
  return parse_run_config(j);
}

struct Fixture {
  RunConfig cfg;
  Dataset data;
  std::shared_ptr<const EmbeddingBackend> phi;

  explicit Fixture(RunConfig c) : cfg(std::move(c)), data(prepare_dataset(cfg, cfg.data.split_seed)) {
    phi = make_embedding(cfg, data.vocab);
  }

  Trainer trainer(const TrainConfig& tc) const {
    const bool pool = tc.mode != TrainMode::no_ballast;
    auto provider = pool ? make_provider(cfg, data, tc.provider_seed) : nullptr;
    return Trainer(tc, data.low.kept, phi, provider, pool ? prompt_template_for(cfg) : std::string(),
                   data.split.val);
  }
  Trainer trainer() const { return trainer(cfg.train); }
};

double class_nll(const Generator& g, const Corpus& train) {
  Rng rng(5);
  return mean_nll(g, train.filter_label(g.class_id()), rng);
}

}  // namespace

TEST_CASE("zero pretraining epochs leave generators untouched") {
  Fixture f(small_config());
  f.cfg.train.generator.pretrain_epochs = 0;
  auto t = f.trainer();
  std::vector<ParameterSet> before;
  for (const auto& g : t.generators()) before.push_back(g.params());
  t.pretrain();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(t.generators()[i].params() == before[i]);
  CHECK(t.pretrained());
}

TEST_CASE("pretraining lowers each generator's NLL") {
  const Fixture f(small_config());
  auto t = f.trainer();
  std::vector<double> before;
  for (const auto& g : t.generators()) before.push_back(class_nll(g, f.data.low.kept));
  t.pretrain();
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(class_nll(t.generators()[i], f.data.low.kept) < before[i]);
  }
  REQUIRE(t.pool() != nullptr);
  CHECK(t.pool()->size() == f.data.low.kept.count(0));
  CHECK(t.provider_calls() >= 1);
}

TEST_CASE("step kinds follow the mode") {
  const Fixture f(small_config());
  SUBCASE("full alternates by parity") {
    auto t = f.trainer();
    t.run();
    REQUIRE(t.log().records.size() == 6 * 2);
    for (const auto& r : t.log().records) {
      CHECK(r.kind == (r.epoch % 2 == 1 ? StepKind::toxicity : StepKind::authenticity));
    }
  }
  SUBCASE("without the toxicity step") {
    TrainConfig tc = f.cfg.train;
    tc.mode = TrainMode::no_toxicity_step;
    auto t = f.trainer(tc);
    t.pretrain();
    for (const auto& r : t.adversarial_epoch(1)) CHECK(r.kind == StepKind::authenticity);
    CHECK(t.refinements() == 1);
  }
  SUBCASE("joint") {
    TrainConfig tc = f.cfg.train;
    tc.mode = TrainMode::joint;
    auto t = f.trainer(tc);
    t.pretrain();
    for (const auto& r : t.adversarial_epoch(1)) CHECK(r.kind == StepKind::joint);
  }
  SUBCASE("epochs must come in order") {
    auto t = f.trainer();
    CHECK_THROWS(t.adversarial_epoch(1));  // before pretraining
    t.pretrain();
    CHECK_THROWS(t.adversarial_epoch(2));
  }
}

TEST_CASE("ballast size follows the refinement schedule") {
  RunConfig cfg = small_config(TrainMode::full, 6);
  cfg.train.ballast.target_size = 5;
  const Fixture f(cfg);
  auto t = f.trainer();
  t.run();
  const std::size_t n0 = f.data.low.kept.count(0);
  std::vector<std::size_t> expected{n0};
  double r = 50.0;
  for (int epoch = 1; epoch <= 6; ++epoch) {
    std::size_t next = expected.back();
    if (next > 5) {
      next = std::max<std::size_t>(5, static_cast<std::size_t>(std::ceil(r / 100.0 * n0 - 1e-9)));
      r /= 2;
    }
    expected.push_back(next);
  }
  CHECK(t.pool_history() == expected);
  CHECK(t.refinements() == 6);
  for (const auto& rec : t.log().records) CHECK(rec.ballast_size == expected[rec.epoch - 1]);
}

TEST_CASE("no_ballast mode never touches the provider or the pool") {
  const Fixture f(small_config(TrainMode::no_ballast));
  auto t = f.trainer();
  t.run();
  CHECK(t.provider_calls() == 0);
  CHECK(t.refinements() == 0);
  CHECK(t.pool() == nullptr);
  for (const auto& r : t.log().records) {
    CHECK(r.kind == StepKind::authenticity);
    CHECK(r.ballast_size == 0);
  }
  TrainConfig full = f.cfg.train;
  full.mode = TrainMode::full;
  CHECK_THROWS_AS(Trainer(full, f.data.low.kept, f.phi, nullptr, ""), ConfigError);
}

TEST_CASE("every reward handed to REINFORCE lies in [0, 1]") {
  for (TrainMode mode : {TrainMode::full, TrainMode::joint, TrainMode::no_ballast}) {
    const Fixture f(small_config(mode, 4));
    auto t = f.trainer();
    t.run();
    const auto& audit = t.reward_audit();
    CHECK(audit.checked == 4 * 2 * f.cfg.train.generator.batch);
    CHECK(audit.violations == 0);
    CHECK(audit.min >= 0.0);
    CHECK(audit.max <= 1.0);
  }
}

TEST_CASE("identical seeds give identical logs; other seeds differ") {
  const Fixture f(small_config());
  auto a = f.trainer();
  auto b = f.trainer();
  CHECK(train_log_csv(a.run()) == train_log_csv(b.run()));
  TrainConfig other = f.cfg.train;
  other.model_seed += 1;
  auto c = f.trainer(other);
  CHECK(train_log_csv(c.run()) != train_log_csv(a.log()));
}

TEST_CASE("resuming reproduces the uninterrupted run") {
  const Fixture f(small_config(TrainMode::full, 6));
  testing::TempDir whole, split;
  auto a = f.trainer();
  a.run({whole.path(), false, -1});

  auto b = f.trainer();
  b.run({split.path(), false, 3});
  CHECK(b.epochs_done() == 3);
  auto c = f.trainer();
  c.run({split.path(), true, -1});
  CHECK(c.epochs_done() == 6);
  CHECK(c.provider_calls() == a.provider_calls());
  CHECK(testing::read_file(split / "trainlog.csv") == testing::read_file(whole / "trainlog.csv"));
  CHECK(testing::read_file(split / "convergence.csv") ==
        testing::read_file(whole / "convergence.csv"));
  for (int k = 0; k < 2; ++k) CHECK(c.generators()[k].params() == a.generators()[k].params());

  // Pruned to the last three plus the best by validation NLL.
  std::size_t kept = 0;
  for (const auto& e : fs::directory_iterator(whole / "checkpoints")) kept += e.is_directory();
  CHECK(kept >= 3);
  CHECK(kept <= 4);
  CHECK(fs::exists(whole / "checkpoints" / "epoch_0006" / "state.json"));
  CHECK(fs::exists(whole / "checkpoints" / "best.txt"));
  CHECK(fs::exists(whole / "final" / "generator_1.ckpt"));
  REQUIRE(latest_checkpoint(whole.path()).has_value());
  CHECK(latest_checkpoint(whole.path())->filename() == "epoch_0006");
}

TEST_CASE("max_epoch 0 stops after pretraining") {
  const Fixture f(small_config(TrainMode::full, 0));
  testing::TempDir out;
  auto t = f.trainer();
  t.run({out.path(), false, -1});
  CHECK(t.pretrained());
  CHECK(t.log().records.empty());
  CHECK(fs::exists(out / "checkpoints" / "epoch_0000"));
}

TEST_CASE("augmentation sampling") {
  const Fixture f(small_config(TrainMode::full, 2));
  auto t = f.trainer();
  t.run();
  const Corpus aug = t.generate_augmentation({{1, 3}, {2, 0}}, 11);
  CHECK(aug.size() == 3);
  CHECK(aug.count(1) == 3);
  for (const auto& ex : aug.examples()) {
    CHECK(ex.source == Source::generated);
    CHECK(ex.seq.size() <= f.cfg.train.generator.max_len);
    for (TokenId tok : ex.seq) CHECK(tok < f.data.vocab->size());
  }
  CHECK(t.generate_augmentation({{1, 3}, {2, 0}}, 11) == aug);
  CHECK_THROWS_AS(t.generate_augmentation({{0, 1}}, 1), ConfigError);
  CHECK_THROWS_AS(t.generate_augmentation({{3, 1}}, 1), ConfigError);
  CHECK_THROWS_AS(t.generate_augmentation({{1, -1}}, 1), ConfigError);
}

TEST_CASE("toxicity reward rises over a full run") {
  RunConfig cfg = small_config(TrainMode::full, 40);
  cfg.data.n_per_class = 400;
  cfg.train.ballast.target_size = 20;
  const Fixture f(cfg);
  auto t = f.trainer();
  t.run();
  // Mean toxicity-step reward over classes: first toxicity epoch vs last.
  double first = 0, last = 0;
  for (const auto& r : t.log().records) {
    if (r.epoch == 1) first += r.reward_mean;
    if (r.epoch == 39) last += r.reward_mean;
  }
  CHECK(last > first);
}
