#include "toxigan/config.hpp"

#include <fstream>
#include <set>

#include "toxigan/errors.hpp"

namespace toxigan {

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::full: return "full";
    case TrainMode::no_ballast: return "no_ballast";
    case TrainMode::no_toxicity_step: return "no_toxicity_step";
    case TrainMode::joint: return "joint";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  for (TrainMode m : {TrainMode::full, TrainMode::no_ballast, TrainMode::no_toxicity_step,
                      TrainMode::joint}) {
    if (name == train_mode_name(m)) return m;
  }
  throw ConfigError("unknown training mode: " + name);
}

namespace {

using nlohmann::json;

/// Walks one JSON object, remembering which keys were consumed so unknown
/// (typically misspelled) keys can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where("") + "expected an object");
    obj_ = &j;
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_->contains(key)) return;
    try {
      out = (*obj_)[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + "wrong type");
    }
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!obj_->contains(key)) throw ConfigError(where(key) + "required field missing");
    read(key, out);
  }

  void ensure(const char* key, bool ok, const std::string& rule) const {
    if (!ok) throw ConfigError(where(key) + rule);
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    const json& sub = obj_->contains(key) ? (*obj_)[key] : empty;
    return Section(sub, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : obj_->items()) {
      if (!seen_.count(k)) throw ConfigError(where(k) + "unknown field");
    }
  }

  std::string where(const std::string& key) const {
    std::string p = path_;
    if (!key.empty()) p = p.empty() ? key : p + "." + key;
    return p + ": ";
  }

 private:
  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E>
E parse_enum(Section& s, const char* key, E current,
             std::initializer_list<std::pair<const char*, E>> options) {
  std::string name;
  for (const auto& [n, v] : options) {
    if (v == current) name = n;
  }
  s.read(key, name);
  for (const auto& [n, v] : options) {
    if (name == n) return v;
  }
  s.ensure(key, false, "unsupported value '" + name + "'");
  return current;
}

const char* provider_mode_name(ProviderMode m) {
  return m == ProviderMode::remote_llm ? "remote_llm" : "corpus_sampler";
}
const char* alternation_name(Alternation a) {
  return a == Alternation::epoch ? "epoch" : "minibatch";
}
const char* llm_head_name(LlmNeutralHead h) {
  return h == LlmNeutralHead::fake ? "fake" : "neutral";
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  Section root(j, "");
  root.require("output_dir", cfg.output_dir);
  root.ensure("output_dir", !cfg.output_dir.empty(), "must not be empty");

  {
    auto s = root.child("data");
    auto& d = cfg.data;
    s.require("source", d.source);
    s.ensure("source", d.source == "synthetic" || d.source == "jsonl",
             "must be 'synthetic' or 'jsonl'");
    s.read("num_toxic", d.num_toxic);
    s.read("content_vocab", d.content_vocab);
    s.read("mix_rate", d.mix_rate);
    s.read("min_len", d.min_len);
    s.read("max_len", d.max_len);
    s.read("n_per_class", d.n_per_class);
    s.read("synthetic_seed", d.synthetic_seed);
    s.read("heldout_neutral", d.heldout_neutral);
    s.read("path", d.path);
    s.read("neutral_label", d.neutral_label);
    s.read("toxic_labels", d.toxic_labels);
    s.read("toxic_lexicon", d.toxic_lexicon);
    s.read("split_seed", d.split_seed);
    s.read("keep_fraction", d.keep_fraction);
    s.read("resplit_per_seed", d.resplit_per_seed);
    {
      auto sp = s.child("split");
      sp.read("train", d.split.train);
      sp.read("val", d.split.val);
      sp.read("test", d.split.test);
      sp.ensure("train", d.split.train > 0 && d.split.val > 0 && d.split.test > 0,
                "all split ratios must be positive");
      sp.ensure("train", std::abs(d.split.train + d.split.val + d.split.test - 1.0) <= 1e-9,
                "split ratios must sum to 1");
      sp.finish();
    }
    if (d.source == "synthetic") {
      s.ensure("num_toxic", d.num_toxic >= 1, "must be >= 1");
      s.ensure("mix_rate", d.mix_rate > 0.0 && d.mix_rate <= 1.0, "must lie in (0, 1]");
      s.ensure("min_len", d.min_len >= 1, "must be >= 1");
      s.ensure("max_len", d.max_len >= d.min_len, "must be >= min_len");
      s.ensure("n_per_class", d.n_per_class >= 1, "must be >= 1");
      s.ensure("content_vocab", d.content_vocab >= static_cast<std::size_t>(2 * d.num_toxic),
               "too small for the number of toxic classes");
    } else {
      s.ensure("path", !d.path.empty(), "required for jsonl data");
      s.ensure("neutral_label", !d.neutral_label.empty(), "required for jsonl data");
      s.ensure("toxic_labels", !d.toxic_labels.empty(), "required for jsonl data");
    }
    s.ensure("keep_fraction", d.keep_fraction > 0.0 && d.keep_fraction <= 1.0,
             "must lie in (0, 1]");
    s.finish();
  }
  {
    auto s = root.child("embedding");
    auto& e = cfg.embedding;
    s.read("backend", e.backend);
    s.ensure("backend", e.backend == "hash_bag" || e.backend == "remote",
             "must be 'hash_bag' or 'remote'");
    s.read("dim", e.dim);
    s.ensure("dim", e.dim >= 2, "must be >= 2");
    s.read("seed", e.seed);
    s.read("endpoint", e.endpoint);
    s.read("model", e.model);
    s.read("timeout_s", e.timeout_s);
    s.read("retries", e.retries);
    if (e.backend == "remote") s.ensure("endpoint", !e.endpoint.empty(), "required for remote backend");
    s.finish();
  }
  auto& t = cfg.train;
  {
    auto s = root.child("generator");
    auto& g = t.generator;
    s.read("embed_dim", g.embed_dim);
    s.read("hidden", g.hidden);
    s.read("max_len", g.max_len);
    s.read("pretrain_epochs", g.pretrain_epochs);
    s.read("pretrain_lr", g.pretrain_lr);
    s.read("pretrain_batch", g.pretrain_batch);
    s.read("lr", g.lr);
    s.read("batch", g.batch);
    s.read("updates_per_epoch", g.updates_per_epoch);
    g.alternation = parse_enum(s, "alternation", g.alternation,
                               {{"epoch", Alternation::epoch}, {"minibatch", Alternation::minibatch}});
    s.ensure("embed_dim", g.embed_dim >= 1, "must be >= 1");
    s.ensure("hidden", g.hidden >= 1, "must be >= 1");
    s.ensure("max_len", g.max_len >= 1, "must be >= 1");
    s.ensure("pretrain_lr", g.pretrain_lr >= 0.0, "must be >= 0");
    s.ensure("pretrain_batch", g.pretrain_batch >= 1, "must be >= 1");
    s.ensure("lr", g.lr >= 0.0, "must be >= 0");
    s.ensure("batch", g.batch >= 1, "must be >= 1");
    s.ensure("updates_per_epoch", g.updates_per_epoch >= 1, "must be >= 1");
    s.finish();
  }
  {
    auto s = root.child("discriminator");
    auto& d = t.discriminator;
    s.read("hidden", d.hidden);
    s.read("pretrain_epochs", d.pretrain_epochs);
    s.read("lr", d.lr);
    s.read("batch", d.batch);
    s.read("real_per_epoch", d.real_per_epoch);
    s.read("passes_per_epoch", d.passes_per_epoch);
    s.ensure("passes_per_epoch", d.passes_per_epoch >= 1, "must be >= 1");
    d.llm_head = parse_enum(s, "llm_neutral_head", d.llm_head,
                            {{"fake", LlmNeutralHead::fake}, {"neutral", LlmNeutralHead::neutral}});
    s.ensure("hidden", d.hidden >= 1, "must be >= 1");
    s.ensure("lr", d.lr >= 0.0, "must be >= 0");
    s.ensure("batch", d.batch >= 1, "must be >= 1");
    s.finish();
  }
  {
    auto s = root.child("ballast");
    auto& b = t.ballast;
    s.read("target_size", b.target_size);
    s.read("r0", b.r0);
    s.read("fewshot_k", b.fewshot_k);
    s.ensure("target_size", b.target_size >= 1, "must be >= 1");
    s.ensure("r0", b.r0 > 0.0 && b.r0 <= 100.0, "must lie in (0, 100]");
    s.ensure("fewshot_k", b.fewshot_k >= 1, "must be >= 1");
    s.ensure("fewshot_k", b.fewshot_k <= b.target_size, "must not exceed target_size");
    s.finish();
  }
  {
    auto s = root.child("reward");
    auto& r = t.reward;
    s.read("r_max", r.r_max);
    s.read("lambda", r.lambda);
    s.read("alpha", r.alpha);
    s.read("beta", r.beta);
    s.ensure("r_max", r.r_max > 0.0, "must be > 0");
    s.ensure("lambda", r.lambda >= 0.0 && r.lambda <= 1.0, "must lie in [0, 1]");
    s.finish();
  }
  {
    auto s = root.child("provider");
    auto& p = cfg.provider;
    p.mode = parse_enum(s, "mode", p.mode,
                        {{"corpus_sampler", ProviderMode::corpus_sampler},
                         {"remote_llm", ProviderMode::remote_llm}});
    s.read("neutral_corpus", p.neutral_corpus);
    s.read("endpoint", p.endpoint);
    s.read("model", p.model);
    s.read("timeout_s", p.timeout_s);
    s.read("retries", p.retries);
    s.read("max_tokens", p.max_tokens);
    s.read("max_topup", p.max_topup);
    s.read("prompt_template", p.prompt_template);
    s.ensure("retries", p.retries >= 0, "must be >= 0");
    s.ensure("timeout_s", p.timeout_s > 0.0, "must be > 0");
    s.ensure("max_tokens", p.max_tokens >= 1, "must be >= 1");
    if (p.mode == ProviderMode::corpus_sampler && cfg.data.source == "jsonl") {
      s.ensure("neutral_corpus", !p.neutral_corpus.empty(),
               "required for corpus_sampler mode with jsonl data");
    }
    s.finish();
  }
  {
    auto s = root.child("train");
    std::string mode = train_mode_name(t.mode);
    s.read("mode", mode);
    try {
      t.mode = parse_train_mode(mode);
    } catch (const ConfigError&) {
      s.ensure("mode", false, "unsupported value '" + mode + "'");
    }
    s.read("max_epoch", t.max_epoch);
    s.read("model_seed", t.model_seed);
    s.read("sample_seed", t.sample_seed);
    s.read("provider_seed", t.provider_seed);
    s.read("checkpoint_keep", t.checkpoint_keep);
    s.ensure("max_epoch", t.max_epoch >= 0, "must be >= 0");
    s.ensure("checkpoint_keep", t.checkpoint_keep >= 1, "must be >= 1");
    s.finish();
  }
  {
    auto s = root.child("evaluation");
    auto& e = cfg.evaluation;
    s.read("seeds", e.seeds);
    s.ensure("seeds", !e.seeds.empty(), "at least one seed required");
    s.read("joint_lambdas", e.joint_lambdas);
    for (double l : e.joint_lambdas) {
      s.ensure("joint_lambdas", l >= 0.0 && l <= 1.0, "entries must lie in [0, 1]");
    }
    auto ds = s.child("downstream");
    ds.read("hidden", e.downstream.hidden);
    ds.read("epochs", e.downstream.epochs);
    ds.read("lr", e.downstream.lr);
    ds.read("batch_size", e.downstream.batch_size);
    ds.ensure("hidden", e.downstream.hidden >= 1, "must be >= 1");
    ds.finish();
    s.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
  const auto& d = cfg.data;
  const auto& t = cfg.train;
  const auto& g = t.generator;
  const auto& dc = t.discriminator;
  json j;
  j["output_dir"] = cfg.output_dir;
  j["data"] = {{"source", d.source},
               {"num_toxic", d.num_toxic},
               {"content_vocab", d.content_vocab},
               {"mix_rate", d.mix_rate},
               {"min_len", d.min_len},
               {"max_len", d.max_len},
               {"n_per_class", d.n_per_class},
               {"synthetic_seed", d.synthetic_seed},
               {"heldout_neutral", d.heldout_neutral},
               {"path", d.path},
               {"neutral_label", d.neutral_label},
               {"toxic_labels", d.toxic_labels},
               {"toxic_lexicon", d.toxic_lexicon},
               {"split", {{"train", d.split.train}, {"val", d.split.val}, {"test", d.split.test}}},
               {"split_seed", d.split_seed},
               {"keep_fraction", d.keep_fraction},
               {"resplit_per_seed", d.resplit_per_seed}};
  const auto& e = cfg.embedding;
  j["embedding"] = {{"backend", e.backend}, {"dim", e.dim},           {"seed", e.seed},
                    {"endpoint", e.endpoint}, {"model", e.model},     {"timeout_s", e.timeout_s},
                    {"retries", e.retries}};
  j["generator"] = {{"embed_dim", g.embed_dim},
                    {"hidden", g.hidden},
                    {"max_len", g.max_len},
                    {"pretrain_epochs", g.pretrain_epochs},
                    {"pretrain_lr", g.pretrain_lr},
                    {"pretrain_batch", g.pretrain_batch},
                    {"lr", g.lr},
                    {"batch", g.batch},
                    {"updates_per_epoch", g.updates_per_epoch},
                    {"alternation", alternation_name(g.alternation)}};
  j["discriminator"] = {{"hidden", dc.hidden},
                        {"pretrain_epochs", dc.pretrain_epochs},
                        {"lr", dc.lr},
                        {"batch", dc.batch},
                        {"real_per_epoch", dc.real_per_epoch},
                        {"passes_per_epoch", dc.passes_per_epoch},
                        {"llm_neutral_head", llm_head_name(dc.llm_head)}};
  j["ballast"] = {{"target_size", t.ballast.target_size},
                  {"r0", t.ballast.r0},
                  {"fewshot_k", t.ballast.fewshot_k}};
  j["reward"] = {{"r_max", t.reward.r_max},
                 {"lambda", t.reward.lambda},
                 {"alpha", t.reward.alpha},
                 {"beta", t.reward.beta}};
  const auto& p = cfg.provider;
  j["provider"] = {{"mode", provider_mode_name(p.mode)},
                   {"neutral_corpus", p.neutral_corpus},
                   {"endpoint", p.endpoint},
                   {"model", p.model},
                   {"timeout_s", p.timeout_s},
                   {"retries", p.retries},
                   {"max_tokens", p.max_tokens},
                   {"max_topup", p.max_topup},
                   {"prompt_template", p.prompt_template}};
  j["train"] = {{"mode", train_mode_name(t.mode)},
                {"max_epoch", t.max_epoch},
                {"model_seed", t.model_seed},
                {"sample_seed", t.sample_seed},
                {"provider_seed", t.provider_seed},
                {"checkpoint_keep", t.checkpoint_keep}};
  const auto& ev = cfg.evaluation;
  j["evaluation"] = {{"seeds", ev.seeds},
                     {"joint_lambdas", ev.joint_lambdas},
                     {"downstream",
                      {{"hidden", ev.downstream.hidden},
                       {"epochs", ev.downstream.epochs},
                       {"lr", ev.downstream.lr},
                       {"batch_size", ev.downstream.batch_size}}}};
  return j;
}

}  // namespace toxigan
