#include "toxigan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <regex>

#include <nlohmann/json.hpp>

#include "toxigan/diagnostics.hpp"
#include "toxigan/errors.hpp"
#include "toxigan/objectives.hpp"

namespace toxigan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Re-raises a library error with a location prefix, keeping its category.
template <typename Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StateError& e) {
    throw StateError(where + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw ContractViolation(where + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const TransportError& e) {
    throw TransportError(where + ": " + e.what());
  } catch (const LoadError& e) {
    throw LoadError(where + ": " + e.what());
  }
}

std::string epoch_dir_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d", epoch);
  return buf;
}

std::string generator_file(int class_id) {
  return "generator_" + std::to_string(class_id) + ".ckpt";
}

json record_to_json(const TrainRecord& r) {
  return {{"epoch", r.epoch},         {"class", r.class_id},         {"kind", step_kind_name(r.kind)},
          {"g_loss", r.g_loss},       {"d_loss", r.d_loss},          {"grad_norm", r.grad_norm},
          {"ballast_size", r.ballast_size}, {"reward_mean", r.reward_mean}};
}

TrainRecord record_from_json(const json& j) {
  TrainRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.class_id = j.at("class").get<int>();
  r.kind = parse_step_kind(j.at("kind").get<std::string>());
  r.g_loss = j.at("g_loss").get<double>();
  r.d_loss = j.at("d_loss").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.ballast_size = j.at("ballast_size").get<std::size_t>();
  r.reward_mean = j.at("reward_mean").get<double>();
  return r;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, Corpus train, std::shared_ptr<const EmbeddingBackend> phi,
                 std::shared_ptr<NeutralProvider> provider, std::string prompt_template,
                 std::optional<Corpus> validation)
    : cfg_(std::move(cfg)),
      train_(std::move(train)),
      validation_(std::move(validation)),
      phi_(std::move(phi)),
      provider_(std::move(provider)),
      prompt_template_(std::move(prompt_template)),
      d_rng_(derive_seed(cfg_.model_seed, 1000)),
      prompt_rng_(derive_seed(cfg_.provider_seed, 1)) {
  const LabelSet& labels = train_.labels();
  const int K = labels.num_toxic();
  if (K < 1) throw ConfigError("at least one toxic class is required");
  if (!phi_) throw ConfigError("an embedding backend is required");
  if (cfg_.max_epoch < 0) throw ConfigError("train.max_epoch: must be >= 0");
  for (int k = 0; k <= K; ++k) {
    if (train_.count(k) == 0) {
      throw ConfigError("class '" + labels.name_of(k) + "' has no training examples");
    }
  }
  if (uses_pool()) {
    if (!provider_) throw ConfigError("mode " + std::string(train_mode_name(cfg_.mode)) +
                                      " needs a neutral-text provider");
    if (train_.count(0) < cfg_.ballast.fewshot_k) {
      throw ConfigError("ballast.fewshot_k: exceeds the " + std::to_string(train_.count(0)) +
                        " neutral training examples");
    }
  }
  if (validation_ && !(validation_->labels() == labels)) {
    throw SchemaError("validation corpus label space differs from the training corpus");
  }

  GeneratorShape shape;
  shape.vocab_size = train_.vocab().size();
  shape.embed_dim = cfg_.generator.embed_dim;
  shape.hidden = cfg_.generator.hidden;
  shape.max_len = cfg_.generator.max_len;
  shape.end_token = Vocabulary::kEos;
  for (int k = 1; k <= K; ++k) {
    generators_.emplace_back(k, shape, derive_seed(cfg_.model_seed, static_cast<std::uint64_t>(k)));
    class_rngs_.emplace_back(derive_seed(cfg_.sample_seed, static_cast<std::uint64_t>(k)));
  }
  d_.emplace(labels, phi_, cfg_.discriminator.hidden, derive_seed(cfg_.model_seed, 0));
  fakes_.assign(static_cast<std::size_t>(K), {});
}

StepKind Trainer::kind_for(int t, std::size_t update) const {
  switch (cfg_.mode) {
    case TrainMode::full:
      if (cfg_.generator.alternation == Alternation::minibatch) {
        const long u = static_cast<long>(t - 1) * static_cast<long>(cfg_.generator.updates_per_epoch) +
                       static_cast<long>(update) + 1;
        return step_kind_for(u);
      }
      return step_kind_for(t);
    case TrainMode::joint:
      return StepKind::joint;
    case TrainMode::no_ballast:
    case TrainMode::no_toxicity_step:
      return StepKind::authenticity;
  }
  return StepKind::authenticity;
}

double Trainer::checked_reward(double r) {
  if (audit_.checked == 0) {
    audit_.min = audit_.max = r;
  } else {
    audit_.min = std::min(audit_.min, r);
    audit_.max = std::max(audit_.max, r);
  }
  ++audit_.checked;
  if (!std::isfinite(r) || r < 0.0 || r > cfg_.reward.r_max) ++audit_.violations;
  return r;
}

std::vector<TokenSequence> Trainer::provider_batch() {
  const PromptText prompt = assemble_fewshot_prompt(*pool_, train_.vocab(), cfg_.ballast.fewshot_k,
                                                    prompt_rng_.next_seed(), prompt_template_);
  std::vector<TokenSequence> out;
  for (auto& ex : provider_->provide(prompt, cfg_.generator.batch)) out.push_back(std::move(ex.seq));
  return out;
}

std::vector<double> Trainer::rewards_for(int class_id, StepKind kind,
                                         const std::vector<GenerationSample>& samples,
                                         double& mean_loss) const {
  const bool need_pool = kind != StepKind::authenticity;
  if (need_pool && (!pool_ || pool_->empty())) {
    throw StateError(std::string(step_kind_name(kind)) + " step with an empty ballast pool");
  }
  const double lambda = cfg_.reward.lambda;
  std::vector<double> rewards;
  rewards.reserve(samples.size());
  double loss_sum = 0.0;
  for (const auto& s : samples) {
    const EmbeddingVector e = phi_->embed(s.seq);
    double loss = 0.0;
    double reward = 0.0;
    if (kind == StepKind::toxicity) {
      loss = toxicity_loss(e, pool_->embeddings());
      reward = toxicity_reward(loss);
    } else {
      const ClassProbabilities probs = d_->classify(e);
      const double auth_loss = authenticity_loss(probs, class_id);
      const double auth_reward = authenticity_reward(probs, class_id);
      if (kind == StepKind::authenticity) {
        loss = auth_loss;
        reward = auth_reward;
      } else {
        const double tox_loss = toxicity_loss(e, pool_->embeddings());
        loss = joint_loss(tox_loss, auth_loss, lambda);
        reward = joint_reward(toxicity_reward(tox_loss), auth_reward, lambda);
      }
    }
    loss_sum += loss;
    rewards.push_back(reward);
  }
  mean_loss = samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size());
  return rewards;
}

double Trainer::discriminator_pass(const std::vector<TrainingItem>& items) {
  if (items.empty()) throw StateError("empty discriminator batch");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), d_rng_.engine());
  const std::size_t bs = cfg_.discriminator.batch;
  double weighted = 0.0;
  std::vector<TrainingItem> mb;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    mb.clear();
    for (std::size_t i = start; i < end; ++i) mb.push_back(items[order[i]]);
    weighted += train_step(*d_, mb, cfg_.discriminator.lr) * static_cast<double>(mb.size());
  }
  return weighted / static_cast<double>(items.size());
}

void Trainer::pretrain() {
  const LabelSet& labels = train_.labels();
  const int K = labels.num_toxic();
  for (int k = 1; k <= K; ++k) {
    with_context("pretraining class " + labels.name_of(k), [&] {
      if (cfg_.generator.pretrain_epochs == 0) return;
      MleOptions opts;
      opts.epochs = cfg_.generator.pretrain_epochs;
      opts.lr = cfg_.generator.pretrain_lr;
      opts.batch_size = cfg_.generator.pretrain_batch;
      opts.seed = derive_seed(cfg_.model_seed, 100 + static_cast<std::uint64_t>(k));
      mle_pretrain(generators_[k - 1], train_.filter_label(k), opts);
    });
  }
  for (int k = 1; k <= K; ++k) {
    auto& g = generators_[k - 1];
    auto& rng = class_rngs_[k - 1];
    fakes_[k - 1].clear();
    for (std::size_t n = 0; n < cfg_.generator.batch; ++n) {
      fakes_[k - 1].push_back(g.sample(g.draw_noise(rng), rng).seq);
    }
  }

  std::vector<TokenSequence> f0;
  if (uses_pool()) {
    std::vector<LabeledExample> neutral;
    for (std::size_t i : train_.class_indices(0)) neutral.push_back(train_[i]);
    initial_pool_.emplace(std::move(neutral), *phi_, K, cfg_.ballast.target_size, cfg_.ballast.r0);
    pool_ = initial_pool_;
    pool_history_.push_back(pool_->size());
    f0 = with_context("pretraining provider batch", [&] { return provider_batch(); });
  }
  const auto items = build_training_batch(train_.examples(), fakes_, f0, labels,
                                          cfg_.discriminator.llm_head);
  for (std::size_t e = 0; e < cfg_.discriminator.pretrain_epochs; ++e) discriminator_pass(items);
  pretrained_ = true;
  epoch_ = 0;
}

std::vector<TrainRecord> Trainer::adversarial_epoch(int t) {
  if (t < 1) throw DomainError("adversarial epochs are numbered from 1");
  if (!pretrained_) throw StateError("adversarial_epoch before pretrain");
  if (t != epoch_ + 1) {
    throw StateError("epoch " + std::to_string(t) + " requested after epoch " +
                     std::to_string(epoch_));
  }
  const LabelSet& labels = train_.labels();
  const int K = labels.num_toxic();
  const std::string at_epoch = "epoch " + std::to_string(t);
  std::vector<TrainRecord> records;
  for (auto& f : fakes_) f.clear();

  for (std::size_t u = 0; u < cfg_.generator.updates_per_epoch; ++u) {
    for (int k = 1; k <= K; ++k) {
      with_context(at_epoch + ", class " + labels.name_of(k), [&] {
        const auto started = std::chrono::steady_clock::now();
        auto& g = generators_[k - 1];
        auto& rng = class_rngs_[k - 1];
        const StepKind kind = kind_for(t, u);
        std::vector<GenerationSample> samples;
        samples.reserve(cfg_.generator.batch);
        for (std::size_t n = 0; n < cfg_.generator.batch; ++n) {
          samples.push_back(g.sample(g.draw_noise(rng), rng));
        }
        double mean_loss = 0.0;
        const auto rewards = rewards_for(k, kind, samples, mean_loss);
        std::vector<ScoredSample> scored;
        scored.reserve(samples.size());
        double reward_sum = 0.0;
        for (std::size_t n = 0; n < samples.size(); ++n) {
          reward_sum += rewards[n];
          scored.push_back({samples[n], checked_reward(rewards[n])});
        }
        TrainRecord rec;
        rec.epoch = t;
        rec.class_id = k;
        rec.kind = kind;
        rec.g_loss = mean_loss;
        rec.ballast_size = pool_ ? pool_->size() : 0;
        rec.reward_mean = reward_sum / static_cast<double>(samples.size());
        rec.grad_norm = reinforce_update(g, scored, cfg_.generator.lr, cfg_.reward.r_max);
        for (auto& s : samples) fakes_[k - 1].push_back(std::move(s.seq));
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        records.push_back(rec);
      });
    }
  }

  with_context(at_epoch + ", discriminator", [&] {
    std::vector<TokenSequence> f0;
    if (uses_pool()) f0 = provider_batch();
    std::size_t n_real = cfg_.discriminator.real_per_epoch;
    if (n_real == 0) n_real = static_cast<std::size_t>(K + 1) * cfg_.generator.batch;
    n_real = std::min(n_real, train_.size());
    // Partial Fisher-Yates: the first n_real positions become a uniform
    // sample without replacement.
    std::vector<std::size_t> idx(train_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<LabeledExample> real;
    real.reserve(n_real);
    for (std::size_t i = 0; i < n_real; ++i) {
      const std::size_t j = i + d_rng_.index(idx.size() - i);
      std::swap(idx[i], idx[j]);
      real.push_back(train_[idx[i]]);
    }
    const auto items =
        build_training_batch(real, fakes_, f0, labels, cfg_.discriminator.llm_head);
    double d_loss = 0.0;
    for (std::size_t pass = 0; pass < cfg_.discriminator.passes_per_epoch; ++pass) {
      const double l = discriminator_pass(items);
      if (pass == 0) d_loss = l;
    }
    for (auto& r : records) r.d_loss = d_loss;
  });

  if (uses_pool()) {
    pool_ = with_context(at_epoch + ", ballast refinement", [&] { return refine_pool(*pool_, *d_, t); });
    ++refinements_;
    pool_history_.push_back(pool_->size());
  }

  epoch_ = t;
  log_.records.insert(log_.records.end(), records.begin(), records.end());
  return records;
}

double Trainer::validation_score() const {
  if (!validation_) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  int n = 0;
  for (const auto& g : generators_) {
    const Corpus slice = validation_->filter_label(g.class_id());
    if (slice.empty()) continue;
    Rng rng(derive_seed(cfg_.model_seed, 900 + static_cast<std::uint64_t>(g.class_id())));
    sum += mean_nll(g, slice, rng);
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

namespace {

// Keeps the newest `keep` epoch checkpoints plus `best`.
void prune_checkpoints(const fs::path& root, std::size_t keep, const std::string& best) {
  static const std::regex pattern("epoch_[0-9]{4,}");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && std::regex_match(name, pattern)) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  if (names.size() <= keep) return;
  for (std::size_t i = 0; i + keep < names.size(); ++i) {
    if (names[i] != best) fs::remove_all(root / names[i]);
  }
}

}  // namespace

const TrainLog& Trainer::run(const RunOptions& options) {
  const bool persist = !options.out_dir.empty();
  const fs::path ckpt_root = options.out_dir / "checkpoints";
  std::string best_name;
  double best_score = std::numeric_limits<double>::infinity();

  auto persist_epoch = [&](int epoch) {
    if (!persist) return;
    fs::create_directories(ckpt_root);
    const std::string name = epoch_dir_name(epoch);
    save_checkpoint(ckpt_root / name);
    const double score = validation_score();
    if (std::isfinite(score) && score < best_score) {
      best_score = score;
      best_name = name;
      std::ofstream(ckpt_root / "best.txt") << name << '\n';
    }
    prune_checkpoints(ckpt_root, cfg_.checkpoint_keep, best_name);
  };

  if (options.resume && persist) {
    if (auto latest = latest_checkpoint(options.out_dir)) {
      load_checkpoint(*latest);
      std::ifstream best_in(ckpt_root / "best.txt");
      if (best_in >> best_name && fs::exists(ckpt_root / best_name / "state.json")) {
        std::ifstream st(ckpt_root / best_name / "state.json");
        const json j = json::parse(st);
        if (j.contains("validation_score") && j["validation_score"].is_number()) {
          best_score = j["validation_score"].get<double>();
        }
      } else {
        best_name.clear();
      }
    }
  }
  if (!pretrained_) {
    pretrain();
    persist_epoch(0);
    if (on_epoch_end) on_epoch_end(0);
  }
  int last = cfg_.max_epoch;
  if (options.stop_after >= 0) last = std::min(last, options.stop_after);
  for (int t = epoch_ + 1; t <= last; ++t) {
    adversarial_epoch(t);
    persist_epoch(t);
    if (on_epoch_end) on_epoch_end(t);
  }
  if (persist) {
    fs::create_directories(options.out_dir);
    write_train_log(options.out_dir / "trainlog.csv", log_);
    if (!log_.records.empty()) {
      write_convergence_csv(options.out_dir / "convergence.csv", convergence_curve(log_));
    }
    if (epoch_ == cfg_.max_epoch) save_checkpoint(options.out_dir / "final");
  }
  return log_;
}

Corpus sample_augmentation(const std::vector<Generator>& generators, const Corpus& like,
                           const std::map<int, int>& budget, std::uint64_t seed) {
  const int K = static_cast<int>(generators.size());
  for (const auto& [label, n] : budget) {
    if (label < 1 || label > K) {
      throw ConfigError("augmentation budget names class " + std::to_string(label) +
                        ", toxic classes are 1.." + std::to_string(K));
    }
    if (n < 0) throw ConfigError("augmentation budget must be non-negative");
  }
  Corpus out = like.empty_like();
  for (const auto& [label, n] : budget) {
    const Generator& g = generators[label - 1];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    for (int i = 0; i < n; ++i) {
      out.add({g.sample(g.draw_noise(rng), rng).seq, label, Source::generated});
    }
  }
  return out;
}

Corpus Trainer::generate_augmentation(const std::map<int, int>& budget,
                                      std::uint64_t seed) const {
  return sample_augmentation(generators_, train_, budget, seed);
}

void Trainer::save_checkpoint(const fs::path& dir) const {
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const std::uint64_t vh = vocab_hash();
  json gens = json::array();
  for (const auto& g : generators_) {
    const auto h = save_generator(tmp / generator_file(g.class_id()), g, vh);
    gens.push_back({{"class", g.class_id()}, {"file", generator_file(g.class_id())}, {"hash", h}});
  }
  const auto dh = save_discriminator(tmp / "discriminator.ckpt", *d_, vh);
  train_.vocab().save(tmp / "vocab.txt");

  const LabelSet& labels = train_.labels();
  std::vector<std::string> toxic;
  for (int k = 1; k <= labels.num_toxic(); ++k) toxic.push_back(labels.name_of(k));

  json state;
  state["format"] = 1;
  state["epoch"] = epoch_;
  state["mode"] = train_mode_name(cfg_.mode);
  state["vocab_hash"] = vh;
  state["labels"] = {{"neutral", labels.name_of(0)}, {"toxic", toxic}};
  state["generators"] = gens;
  state["discriminator"] = {{"file", "discriminator.ckpt"}, {"hash", dh}};
  json rngs = json::array();
  for (const auto& r : class_rngs_) rngs.push_back(r.state());
  state["class_rngs"] = rngs;
  state["d_rng"] = d_rng_.state();
  state["prompt_rng"] = prompt_rng_.state();
  state["provider_state"] = provider_ ? provider_->state() : std::string();
  state["provider_calls"] = provider_calls();
  state["refinements"] = refinements_;
  state["reward_audit"] = {{"checked", audit_.checked},
                           {"violations", audit_.violations},
                           {"min", audit_.min},
                           {"max", audit_.max}};
  if (pool_) {
    state["pool"] = {{"origin", pool_->origin()},
                     {"r_percent", pool_->r_percent()},
                     {"epoch_of_last_refine", pool_->epoch_of_last_refine()}};
  } else {
    state["pool"] = nullptr;
  }
  state["pool_history"] = pool_history_;
  const double vs = validation_score();
  state["validation_score"] = std::isfinite(vs) ? json(vs) : json(nullptr);
  json recs = json::array();
  for (const auto& r : log_.records) recs.push_back(record_to_json(r));
  state["records"] = recs;
  state["run"] = run_meta_;
  std::ofstream(tmp / "state.json") << state.dump(1) << '\n';

  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

void Trainer::load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "state.json");
  if (!in) throw LoadError("no state.json in checkpoint " + dir.string());
  json state;
  try {
    state = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("corrupt checkpoint state in " + dir.string() + ": " + e.what());
  }
  try {
    const std::uint64_t vh = vocab_hash();
    if (state.at("vocab_hash").get<std::uint64_t>() != vh) {
      throw LoadError("checkpoint vocabulary does not match the training corpus");
    }
    const LabelSet& labels = train_.labels();
    if (state.at("labels").at("toxic").size() != static_cast<std::size_t>(labels.num_toxic())) {
      throw LoadError("checkpoint class count differs from the configuration");
    }
    for (auto& g : generators_) {
      Generator loaded = load_generator(dir / generator_file(g.class_id()), vh);
      if (!(loaded.shape() == g.shape()) || loaded.class_id() != g.class_id()) {
        throw LoadError("generator shape in checkpoint differs from the configuration");
      }
      g = std::move(loaded);
    }
    load_discriminator(dir / "discriminator.ckpt", *d_, vh);

    const auto& rngs = state.at("class_rngs");
    if (rngs.size() != class_rngs_.size()) throw LoadError("checkpoint RNG count mismatch");
    for (std::size_t i = 0; i < class_rngs_.size(); ++i) class_rngs_[i].restore(rngs[i].get<std::string>());
    d_rng_.restore(state.at("d_rng").get<std::string>());
    prompt_rng_.restore(state.at("prompt_rng").get<std::string>());
    if (provider_) provider_->restore(state.at("provider_state").get<std::string>());
    refinements_ = state.at("refinements").get<std::size_t>();
    const auto calls = state.at("provider_calls").get<std::size_t>();
    const std::size_t live = provider_ ? provider_->calls() : 0;
    provider_calls_base_ = calls > live ? calls - live : 0;
    const auto& a = state.at("reward_audit");
    audit_ = {a.at("checked").get<std::size_t>(), a.at("violations").get<std::size_t>(),
              a.at("min").get<double>(), a.at("max").get<double>()};

    const auto& p = state.at("pool");
    if (!p.is_null()) {
      if (!initial_pool_) {
        std::vector<LabeledExample> neutral;
        for (std::size_t i : train_.class_indices(0)) neutral.push_back(train_[i]);
        initial_pool_.emplace(std::move(neutral), *phi_, labels.num_toxic(),
                              cfg_.ballast.target_size, cfg_.ballast.r0);
      }
      pool_ = initial_pool_->with_members(p.at("origin").get<std::vector<std::size_t>>(),
                                          p.at("r_percent").get<double>(),
                                          p.at("epoch_of_last_refine").get<int>());
    } else {
      pool_.reset();
    }
    pool_history_ = state.at("pool_history").get<std::vector<std::size_t>>();
    log_.records.clear();
    for (const auto& r : state.at("records")) log_.records.push_back(record_from_json(r));
    epoch_ = state.at("epoch").get<int>();
  } catch (const json::exception& e) {
    throw LoadError("malformed checkpoint state in " + dir.string() + ": " + e.what());
  }
  for (auto& f : fakes_) f.clear();
  pretrained_ = true;
}

std::optional<fs::path> latest_checkpoint(const fs::path& out_dir) {
  const fs::path root = out_dir / "checkpoints";
  if (!fs::is_directory(root)) return std::nullopt;
  static const std::regex pattern("epoch_([0-9]{4,})");
  std::optional<fs::path> best;
  int best_epoch = -1;
  for (const auto& entry : fs::directory_iterator(root)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || !std::regex_match(name, m, pattern)) continue;
    if (!fs::exists(entry.path() / "state.json")) continue;
    const int e = std::stoi(m[1].str());
    if (e > best_epoch) {
      best_epoch = e;
      best = entry.path();
    }
  }
  return best;
}

}  // namespace toxigan
