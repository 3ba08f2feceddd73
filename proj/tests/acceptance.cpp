// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "toxigan/commands.hpp"
#include "toxigan/diagnostics.hpp"
#include "toxigan/evaluation.hpp"
#include "toxigan/experiment.hpp"
#include "toxigan/kernels.hpp"
#include "toxigan/trainer.hpp"

using namespace toxigan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("criterion %2d: %s  %s (%s)\n", id, pass ? "PASS" : "FAIL", title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Runs `body`, turning an exception into a failed criterion.
void criterion(int id, const std::string& title, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(id, pass, title, detail);
  } catch (const std::exception& e) {
    report(id, false, title, std::string("threw: ") + e.what());
  }
}

RunConfig synthetic_config(int max_epoch) {
  nlohmann::json j{{"output_dir", "unused"},
                   {"data",
                    {{"source", "synthetic"},
                     {"num_toxic", 2},
                     {"content_vocab", 60},
                     {"mix_rate", 0.6},
                     {"n_per_class", 2000}}},
                   {"train", {{"max_epoch", max_epoch}}}};
  return parse_run_config(j);
}

struct Bench {
  RunConfig cfg;
  Dataset data;
  std::shared_ptr<const EmbeddingBackend> phi;
  std::string tmpl;

  explicit Bench(RunConfig c) : cfg(std::move(c)), data(prepare_dataset(cfg, cfg.data.split_seed)) {
    phi = make_embedding(cfg, data.vocab);
    tmpl = prompt_template_for(cfg);
  }

  Trainer trainer(TrainConfig tc) const {
    const bool pool = tc.mode != TrainMode::no_ballast;
    auto provider = pool ? make_provider(cfg, data, tc.provider_seed) : nullptr;
    return Trainer(tc, data.low.kept, phi, provider, pool ? tmpl : std::string(), data.split.val);
  }

  std::map<int, int> budget() const {
    std::map<int, int> b;
    for (const auto& [label, n] : data.low.budget) {
      if (label > 0) b[label] = n;
    }
    return b;
  }
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("toxigan_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

double rel_error(const ParameterSet& a, const ParameterSet& b) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += std::pow(a.flat()[i] - b.flat()[i], 2);
    scale += std::pow(b.flat()[i], 2);
  }
  return std::sqrt(diff) / std::max(1e-300, std::sqrt(scale));
}

double loop_f1(const std::vector<std::vector<std::size_t>>& m, std::size_t c) {
  double tp = m[c][c], fp = 0, fn = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i == c) continue;
    fp += m[i][c];
    fn += m[c][i];
  }
  const double p = tp + fp > 0 ? tp / (tp + fp) : 0;
  const double r = tp + fn > 0 ? tp / (tp + fn) : 0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0;
}

}  // namespace

int main() {
  std::printf("toxigan acceptance (kernels: %s)\n",
              std::string(kernels::isa_name(kernels::active().isa)).c_str());

  criterion(1, "alternation contract", [] {
    const auto t0 = Clock::now();
    const Bench bench(synthetic_config(10));
    auto t = bench.trainer(bench.cfg.train);
    t.run();
    bool ok = t.log().records.size() == 10u * 2u;
    std::string kinds;
    for (const auto& r : t.log().records) {
      ok &= r.kind == step_kind_for(r.epoch);
      if (r.class_id == 1) kinds += r.kind == StepKind::toxicity ? 'T' : (r.kind == StepKind::authenticity ? 'A' : 'J');
    }
    ok &= kinds == "TATATATATA";
    const double s = seconds_since(t0);
    return std::make_pair(ok && s < 60.0, "kinds " + kinds + fmt(", %.1f s", s));
  });

  criterion(2, "ballast schedule", [] {
    auto vocab = std::make_shared<Vocabulary>();
    for (int i = 0; i < 60; ++i) vocab->add("w" + std::to_string(i));
    auto phi = std::make_shared<HashBagBackend>(vocab->size(), 64, 3);
    std::vector<LabeledExample> neutral;
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      TokenSequence s;
      for (int j = 0; j < 8; ++j) s.push_back(Vocabulary::kNumReserved + rng.index(60));
      neutral.push_back({s, 0, Source::real});
    }
    BallastPool pool(neutral, *phi, 2, 100, 50.0);
    Discriminator d(LabelSet("neutral", {"a", "b"}), phi, 16, 2);
    for (auto& w : d.body().params().flat()) w = rng.normal_vector(1)[0];
    std::string sizes;
    bool monotone = true;
    for (int epoch = 1; epoch <= 5; ++epoch) {
      const auto next = refine_pool(pool, d, epoch);
      std::vector<bool> kept(pool.size(), false);
      std::size_t j = 0;
      for (std::size_t i = 0; i < pool.size() && j < next.size(); ++i) {
        if (pool.origin()[i] == next.origin()[j]) {
          kept[i] = true;
          ++j;
        }
      }
      double min_kept = 2, max_dropped = -1;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double s = d.neutrality_score(pool.examples()[i].seq);
        if (kept[i]) min_kept = std::min(min_kept, s);
        else max_dropped = std::max(max_dropped, s);
      }
      monotone &= j == next.size() && min_kept >= max_dropped;
      sizes += (sizes.empty() ? "" : ",") + std::to_string(next.size());
      pool = next;
      // Let the scores move between refinements, as training would.
      for (auto& w : d.body().params().flat()) w += 0.1 * rng.normal_vector(1)[0];
    }
    const bool ok = sizes == "500,250,125,100,100" && monotone;
    return std::make_pair(ok, "sizes " + sizes + (monotone ? ", retained >= discarded" : ", ORDER VIOLATED"));
  });

  criterion(3, "REINFORCE gradient oracle", [] {
    const auto t0 = Clock::now();
    GeneratorShape shape{3, 3, 4, 2, std::nullopt};
    double worst = 0, worst_const = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Generator g(1, shape, seed);
      Rng rng(seed + 100);
      const auto z = g.draw_noise(rng);
      const RewardFn reward = [](const TokenSequence& s) { return 0.2 * s[0] + 0.3 * (s[1] == 1); };
      worst = std::max(worst, rel_error(exact_pg_gradient(g, reward, z),
                                        finite_difference_gradient(g, reward, z)));
      const RewardFn constant = [](const TokenSequence&) { return 0.6; };
      worst_const = std::max(worst_const, exact_pg_gradient(g, constant, z).norm());
    }
    const double s = seconds_since(t0);
    const bool ok = worst <= 1e-4 && worst_const < 1e-6 && s < 10.0;
    return std::make_pair(ok, fmt("max rel err %.2e, constant-reward norm %.2e, %.2f s", worst, worst_const, s));
  });

  criterion(4, "variance identity", [] {
    Rng rng(4);
    std::vector<double> tox(100), auth(100);
    for (auto& x : tox) x = rng.uniform();
    for (auto& x : auth) x = rng.uniform();
    double worst = 0;
    for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.5, 0.5}, {0.2, 0.8}, {1.0, 0.0}, {0.7, 0.3}}) {
      const auto r = variance_decomposition(tox, auth, a, b);
      worst = std::max(worst, std::abs(r.var_joint_direct - r.var_joint_decomposed));
    }
    return std::make_pair(worst <= 1e-9, fmt("max |direct - decomposed| = %.2e", worst));
  });

  criterion(5, "metric oracles", [] {
    Rng rng(5);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t c = 2 + rng.index(5);
      std::vector<std::vector<std::size_t>> m(c, std::vector<std::size_t>(c));
      ConfusionMatrix cm(c);
      for (std::size_t t = 0; t < c; ++t) {
        for (std::size_t p = 0; p < c; ++p) {
          m[t][p] = rng.index(20) + (trial == 0 && t == p);
          cm.add(t, p, m[t][p]);
        }
      }
      if (cm.total() == 0) continue;
      double macro = 0;
      for (std::size_t k = 0; k < c; ++k) macro += loop_f1(m, k);
      macro /= c;
      std::vector<std::size_t> hate;
      for (std::size_t k = 1; k < c; ++k) {
        if (rng.bernoulli(0.6) || hate.empty()) hate.push_back(k);
      }
      double h = 0;
      for (std::size_t k : hate) h += loop_f1(m, k);
      h /= hate.size();
      worst = std::max({worst, std::abs(macro_f1(cm) - macro), std::abs(hate_f1(cm, hate) - h)});
    }
    ConfusionMatrix ex(2);
    ex.add(0, 0, 5);
    ex.add(0, 1, 1);
    ex.add(1, 0, 2);
    ex.add(1, 1, 2);
    const std::vector<std::size_t> one{1};
    const double mf = macro_f1(ex), hf = hate_f1(ex, one);
    const bool ok = worst <= 1e-12 && std::abs(mf - 0.6703) < 5e-5 && std::abs(hf - 4.0 / 7) < 1e-12;
    return std::make_pair(ok, fmt("max deviation %.1e; worked example macro %.4f hate %.4f", worst, mf, hf));
  });

  // Criteria 6, 7 and 10 share the five-seed synthetic protocol.
  struct SeedResult {
    std::vector<double> tox_full, tox_notox;
    double pool_tox = 0;
    double f1_aug = 0, f1_os = 0;
    RewardAudit audit_full, audit_notox;
  };
  std::vector<SeedResult> results;
  double protocol_seconds = 0;
  std::string protocol_error;
  try {
    const auto t0 = Clock::now();
    const Bench bench(synthetic_config(40));
    const LexiconToxicityOracle oracle(bench.data.toxic_lexicon);
    const auto budget = bench.budget();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SeedResult r;
      for (TrainMode mode : {TrainMode::full, TrainMode::no_toxicity_step}) {
        TrainConfig tc = seeded_train_config(bench.cfg.train, seed);
        tc.mode = mode;
        auto t = bench.trainer(tc);
        t.run();
        const Corpus aug = t.generate_augmentation(budget, derive_seed(seed, 77));
        auto& tox = mode == TrainMode::full ? r.tox_full : r.tox_notox;
        for (int k = 1; k <= 2; ++k) tox.push_back(avg_toxicity(aug.filter_label(k), oracle));
        if (mode == TrainMode::full) {
          std::vector<TokenSequence> pool;
          for (const auto& ex : t.pool()->examples()) pool.push_back(ex.seq);
          r.pool_tox = avg_toxicity(pool, oracle);
          r.audit_full = t.reward_audit();
          r.f1_aug = train_downstream(concat(bench.data.low.kept, aug), bench.data.split.test, *bench.phi,
                                      seed, bench.cfg.evaluation.downstream)
                         .macro_f1;
          r.f1_os = train_downstream(oversample_baseline(bench.data.low.kept, budget, seed),
                                     bench.data.split.test, *bench.phi, seed,
                                     bench.cfg.evaluation.downstream)
                        .macro_f1;
        } else {
          r.audit_notox = t.reward_audit();
        }
      }
      std::printf("  seed %llu: toxicity full [%.3f %.3f] no_toxicity_step [%.3f %.3f] pool %.3f; "
                  "macro-F1 aug %.6f oversample %.6f\n",
                  static_cast<unsigned long long>(seed), r.tox_full[0], r.tox_full[1], r.tox_notox[0],
                  r.tox_notox[1], r.pool_tox, r.f1_aug, r.f1_os);
      std::fflush(stdout);
      results.push_back(r);
    }
    protocol_seconds = seconds_since(t0);
  } catch (const std::exception& e) {
    protocol_error = e.what();
  }

  criterion(6, "directional toxicity", [&] {
    if (!protocol_error.empty()) throw std::runtime_error(protocol_error);
    int seeds_ok = 0;
    for (const auto& r : results) {
      bool ok = true;
      for (int k = 0; k < 2; ++k) {
        ok &= r.tox_full[k] > r.tox_notox[k];
        ok &= r.tox_full[k] > r.pool_tox && r.tox_notox[k] > r.pool_tox;
      }
      seeds_ok += ok;
    }
    // Both modes train once per seed; the downstream fits ride along.
    const bool ok = seeds_ok >= 4 && protocol_seconds < 15 * 60;
    return std::make_pair(ok, fmt("%.0f/5 seeds with full > no_toxicity_step > pool for every class, %.0f s",
                                  seeds_ok, protocol_seconds));
  });

  criterion(7, "augmentation vs oversampling", [&] {
    if (!protocol_error.empty()) throw std::runtime_error(protocol_error);
    int wins = 0, ties = 0, losses = 0;
    for (const auto& r : results) {
      if (r.f1_aug > r.f1_os) ++wins;
      else if (r.f1_aug == r.f1_os) ++ties;
      else ++losses;
    }
    return std::make_pair(wins + ties >= 4,
                          fmt("macro-F1 aug >= oversample in %.0f/5 seeds (%.0f strict wins, %.0f ties, %.0f losses)",
                              wins + ties, wins, ties, losses));
  });

  criterion(8, "determinism", [] {
    TempDir dir;
    nlohmann::json j{{"output_dir", (dir.path / "a").string()},
                     {"data", {{"source", "synthetic"}, {"n_per_class", 400}}},
                     {"generator", {{"pretrain_epochs", 5}}},
                     {"ballast", {{"target_size", 20}}},
                     {"train", {{"max_epoch", 6}}}};
    std::ofstream(dir.path / "cfg.json") << j.dump(2);
    std::ostringstream out, err;
    const int a = cmd_train({dir.path / "cfg.json", {}, false}, out, err);
    const int b = cmd_train({dir.path / "cfg.json", {"output_dir=" + (dir.path / "b").string()}, false}, out, err);
    const std::string la = slurp(dir.path / "a" / "trainlog.csv");
    const std::string lb = slurp(dir.path / "b" / "trainlog.csv");
    const bool ok = a == 0 && b == 0 && !la.empty() && la == lb;
    return std::make_pair(ok, fmt("exit codes %.0f/%.0f, %.0f-byte logs ", a, b, la.size()) +
                                  (la == lb ? "identical" : "DIFFER"));
  });

  criterion(9, "ablation isolation", [] {
    const Bench bench(synthetic_config(40));
    TrainConfig tc = bench.cfg.train;
    tc.mode = TrainMode::no_ballast;
    auto t = bench.trainer(tc);
    t.run();
    const bool ok = t.provider_calls() == 0 && t.refinements() == 0 && t.pool() == nullptr &&
                    t.log().records.size() == 40u * 2u;
    return std::make_pair(ok, fmt("provider calls %.0f, refinements %.0f over %.0f epochs",
                                  t.provider_calls(), t.refinements(), t.epochs_done()));
  });

  criterion(10, "reward bounding", [&] {
    if (!protocol_error.empty()) throw std::runtime_error(protocol_error);
    std::size_t checked = 0, violations = 0;
    double lo = 1, hi = 0;
    for (const auto& r : results) {
      for (const auto* a : {&r.audit_full, &r.audit_notox}) {
        checked += a->checked;
        violations += a->violations;
        lo = std::min(lo, a->min);
        hi = std::max(hi, a->max);
      }
    }
    const bool ok = checked > 0 && violations == 0 && lo >= 0.0 && hi <= 1.0;
    return std::make_pair(ok, fmt("%.0f rewards checked, %.0f violations, range [%.4f, %.4f]",
                                  checked, violations, lo, hi));
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
