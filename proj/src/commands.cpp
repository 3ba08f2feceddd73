#include "toxigan/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "toxigan/diagnostics.hpp"
#include "toxigan/errors.hpp"
#include "toxigan/evaluation.hpp"
#include "toxigan/experiment.hpp"
#include "toxigan/trainer.hpp"

namespace toxigan {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const ParseError*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const LoadError*>(&e)) return kExitLoad;
  if (dynamic_cast<const TransportError*>(&e)) return kExitTransport;
  return kExitFailure;
}

namespace {

// Order-sensitive fingerprint of a corpus' labels and token text.
std::uint64_t corpus_fingerprint(const Corpus& c, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (const auto& ex : c.examples()) {
    h = fnv1a64(&ex.label, sizeof ex.label, h);
    for (TokenId t : ex.seq) {
      const auto& word = c.vocab().token(t);
      h = fnv1a64(word.data(), word.size() + 1, h);
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

json read_config_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  json j = read_config_json(path);
  apply_overrides(j, overrides);
  return parse_run_config(j);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::map<int, int> toxic_budget(const LowResource& low) {
  std::map<int, int> out;
  for (const auto& [label, n] : low.budget) {
    if (label > 0) out[label] = n;
  }
  return out;
}

struct Stats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
};

// Sample standard deviation (n - 1); zero for a single run.
Stats stats(const std::vector<double>& v) {
  Stats s;
  std::vector<double> x;
  for (double d : v) {
    if (!std::isnan(d)) x.push_back(d);
  }
  if (x.empty()) return s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double d : x) ss += (d - s.mean) * (d - s.mean);
  s.sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
  return s;
}

struct MetricRow {
  std::string method;
  std::uint64_t seed = 0;
  double macro_f1 = 0.0;
  double hate_f1 = 0.0;
  double avg_toxicity = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> extra;  // trailing columns
};

// Per-seed rows, then one aggregate ("mean") row per method carrying the
// standard deviations.
void write_report(const fs::path& path, const std::vector<MetricRow>& rows,
                  const std::vector<std::string>& extra_columns, std::ostream& echo) {
  std::ostringstream os;
  os << "method,seed,macro_f1,hate_f1,avg_toxicity";
  for (const auto& c : extra_columns) os << ',' << c;
  os << ",macro_f1_std,hate_f1_std,avg_toxicity_std\n";
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  for (const auto& m : methods) {
    std::vector<double> f1, hf1, tox;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      os << r.method << ',' << r.seed << ',' << fmt(r.macro_f1) << ',' << fmt(r.hate_f1) << ','
         << fmt(r.avg_toxicity);
      for (const auto& e : r.extra) os << ',' << e;
      for (std::size_t i = r.extra.size(); i < extra_columns.size(); ++i) os << ',';
      os << ",,,\n";
      f1.push_back(r.macro_f1);
      hf1.push_back(r.hate_f1);
      tox.push_back(r.avg_toxicity);
    }
    const Stats a = stats(f1), b = stats(hf1), c = stats(tox);
    os << m << ",mean," << fmt(a.mean) << ',' << fmt(b.mean) << ',' << fmt(c.mean);
    for (std::size_t i = 0; i < extra_columns.size(); ++i) os << ',';
    os << ',' << fmt(a.sd) << ',' << fmt(b.sd) << ',' << fmt(c.sd) << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write report: " + path.string());
  out << os.str();
  echo << os.str();
}

std::set<TokenId> read_word_list(const fs::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon: " + path.string());
  std::set<TokenId> out;
  std::string w;
  while (in >> w) {
    for (const auto& tok : tokenize_text(w)) {
      if (vocab.contains(tok)) out.insert(vocab.id(tok));
    }
  }
  return out;
}

}  // namespace

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json* node = &config;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
      if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
      if (dot == std::string::npos) {
        json value;
        try {
          value = json::parse(raw);
        } catch (const json::parse_error&) {
          value = raw;
        }
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) *node = json::object();
      start = dot + 1;
    }
  }
}

std::map<int, int> parse_budget(const std::string& spec, const LabelSet& labels) {
  std::map<int, int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    auto sep = item.find(':');
    if (sep == std::string::npos) sep = item.find('=');
    if (sep == std::string::npos) throw ConfigError("budget entry '" + item + "' lacks ':' or '='");
    const std::string key = item.substr(0, sep);
    const std::string val = item.substr(sep + 1);
    int label = -1;
    const bool numeric = !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) {
      label = std::stoi(key);
    } else {
      try {
        label = labels.id_of(key);
      } catch (const SchemaError&) {
        throw ConfigError("budget names unknown class '" + key + "'");
      }
    }
    if (label < 1 || label > labels.num_toxic()) {
      throw ConfigError("budget class '" + key + "' is not a toxic class");
    }
    if (val.empty() || val.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("budget count '" + val + "' is not a non-negative integer");
    }
    if (out.count(label)) throw ConfigError("budget lists class '" + key + "' twice");
    out[label] = std::stoi(val);
  }
  return out;
}

TrainedModel load_trained_model(const fs::path& dir) {
  std::ifstream in(dir / "state.json");
  if (!in) throw LoadError("not a checkpoint directory (no state.json): " + dir.string());
  json state;
  try {
    state = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("corrupt checkpoint state: " + std::string(e.what()));
  }
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::load(dir / "vocab.txt"));
  TrainedModel m{vocab, {}, {}, json::object(), 0xcbf29ce484222325ULL};
  try {
    m.labels = LabelSet(state.at("labels").at("neutral").get<std::string>(),
                        state.at("labels").at("toxic").get<std::vector<std::string>>());
    if (state.contains("run")) m.run = state["run"];
  } catch (const json::exception& e) {
    throw LoadError("malformed checkpoint state: " + std::string(e.what()));
  }
  for (int k = 1; k <= m.labels.num_toxic(); ++k) {
    const fs::path file = dir / ("generator_" + std::to_string(k) + ".ckpt");
    m.generators.push_back(load_generator(file, vocab->hash()));
    const std::uint64_t h = read_checkpoint(file).content_hash;
    m.content_hash = fnv1a64(&h, sizeof h, m.content_hash);
  }
  return m;
}

TrainConfig seeded_train_config(const TrainConfig& base, std::uint64_t run_seed) {
  TrainConfig t = base;
  t.model_seed = derive_seed(base.model_seed, run_seed);
  t.sample_seed = derive_seed(base.sample_seed, run_seed);
  t.provider_seed = derive_seed(base.provider_seed, run_seed);
  return t;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config, args.overrides);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    if (!args.resume) {
      fs::remove_all(dir / "checkpoints");
      fs::remove_all(dir / "final");
    }
    std::ofstream(dir / "effective_config.json") << to_json(cfg).dump(2) << '\n';

    const Dataset data = prepare_dataset(cfg, cfg.data.split_seed);
    write_jsonl(dir / "data" / "train.jsonl", data.low.kept);
    write_jsonl(dir / "data" / "val.jsonl", data.split.val);
    write_jsonl(dir / "data" / "test.jsonl", data.split.test);
    json budget = json::object();
    for (const auto& [label, n] : toxic_budget(data.low)) budget[data.labels.name_of(label)] = n;
    std::ofstream(dir / "data" / "budget.json") << budget.dump(2) << '\n';
    if (!data.toxic_lexicon.empty()) {
      std::ofstream lex(dir / "data" / "toxic_lexicon.txt");
      for (TokenId t : data.toxic_lexicon) lex << data.vocab->token(t) << '\n';
    }

    auto phi = make_embedding(cfg, data.vocab);
    const bool pool = cfg.train.mode != TrainMode::no_ballast;
    auto provider = pool ? make_provider(cfg, data, cfg.train.provider_seed) : nullptr;
    Trainer trainer(cfg.train, data.low.kept, phi, provider,
                    pool ? prompt_template_for(cfg) : std::string(), data.split.val);
    trainer.set_run_metadata({{"embedding", to_json(cfg)["embedding"]},
                              {"mode", train_mode_name(cfg.train.mode)}});
    trainer.on_epoch_end = [&](int epoch) {
      if (epoch == 0) {
        out << "pretraining done\n";
        return;
      }
      double reward = 0.0;
      std::size_t n = 0;
      for (const auto& r : trainer.log().records) {
        if (r.epoch == epoch) {
          reward += r.reward_mean;
          ++n;
        }
      }
      out << "epoch " << epoch << '/' << cfg.train.max_epoch << " reward_mean "
          << fmt(n ? reward / static_cast<double>(n) : 0.0) << '\n';
    };
    trainer.run(RunOptions{dir, args.resume, -1});

    const auto& audit = trainer.reward_audit();
    json summary = {{"epochs", trainer.epochs_done()},
                    {"provider_calls", trainer.provider_calls()},
                    {"refinements", trainer.refinements()},
                    {"pool_history", trainer.pool_history()},
                    {"rewards_checked", audit.checked},
                    {"reward_violations", audit.violations}};
    if (provider) summary["provider_warnings"] = provider->warnings();
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
    out << "wrote " << (dir / "trainlog.csv").string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.output.empty()) throw ConfigError("--output is required");
    const TrainedModel model = load_trained_model(args.checkpoint);
    const auto budget = parse_budget(args.budget, model.labels);
    const Corpus like(model.vocab, model.labels);
    const Corpus aug = sample_augmentation(model.generators, like, budget, args.seed);
    char header[96];
    std::snprintf(header, sizeof header, "toxigan generate checkpoint=%016llx seed=%llu",
                  static_cast<unsigned long long>(model.content_hash),
                  static_cast<unsigned long long>(args.seed));
    write_jsonl(args.output, aug, {std::string(header), true});
    out << "wrote " << aug.size() << " examples to " << args.output.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.labels.size() < 2) throw ConfigError("--labels needs a neutral and >= 1 toxic label");
    if (args.seeds.empty()) throw ConfigError("--seeds needs at least one seed");
    if (args.output.empty()) throw ConfigError("--output is required");
    const LabelSet labels(args.labels.front(),
                          std::vector<std::string>(args.labels.begin() + 1, args.labels.end()));

    std::vector<Corpus> raw;
    raw.push_back(load_jsonl(args.train, labels));
    for (const auto& [name, path] : args.augmentations) raw.push_back(load_jsonl(path, labels));
    raw.push_back(load_jsonl(args.test, labels));
    auto vocab = std::make_shared<Vocabulary>();
    for (const auto& c : raw) {
      for (TokenId id = Vocabulary::kNumReserved; id < c.vocab().size(); ++id) {
        vocab->add(c.vocab().token(id));
      }
    }
    std::shared_ptr<const Vocabulary> shared = vocab;
    std::vector<Corpus> corpora;
    for (const auto& c : raw) corpora.push_back(retokenize(c, shared));
    const Corpus& train = corpora.front();
    const Corpus& test = corpora.back();

    const HashBagBackend phi(shared->size(), args.embed_dim, args.embed_seed);
    std::optional<LexiconToxicityOracle> oracle;
    if (!args.toxic_lexicon.empty()) oracle.emplace(read_word_list(args.toxic_lexicon, *shared));
    auto toxicity_of = [&](const Corpus& c) {
      if (!oracle || c.empty()) return std::numeric_limits<double>::quiet_NaN();
      return avg_toxicity(c, *oracle);
    };

    std::vector<MetricRow> rows;
    auto evaluate = [&](const std::string& method, const Corpus& train_set, std::uint64_t seed,
                        double tox) {
      const auto r = train_downstream(train_set, test, phi, seed, args.downstream);
      rows.push_back({method, seed, r.macro_f1, r.hate_f1, tox, {}});
    };

    std::optional<std::map<int, int>> os_budget;
    if (args.oversample_budget) {
      os_budget = parse_budget(*args.oversample_budget, labels);
    } else if (!args.augmentations.empty()) {
      std::map<int, int> b;
      for (int k = 1; k <= labels.num_toxic(); ++k) b[k] = static_cast<int>(corpora[1].count(k));
      os_budget = b;
    }
    if (args.include_base) {
      for (auto seed : args.seeds) evaluate("base", train, seed, std::nan(""));
    }
    if (args.include_oversample && os_budget) {
      for (auto seed : args.seeds) {
        const Corpus os = oversample_baseline(train, *os_budget, seed);
        Corpus added = train.empty_like();
        for (std::size_t i = train.size(); i < os.size(); ++i) added.add(os[i]);
        evaluate("oversample", os, seed, toxicity_of(added));
      }
    }
    for (std::size_t a = 0; a < args.augmentations.size(); ++a) {
      const Corpus& aug = corpora[a + 1];
      const Corpus merged = concat(train, aug);
      for (auto seed : args.seeds) evaluate(args.augmentations[a].first, merged, seed, toxicity_of(aug));
    }
    write_report(args.output, rows, {}, out);
    return static_cast<int>(kExitOk);
  });
}

int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config, args.overrides);
    const auto seeds = args.seeds ? *args.seeds : cfg.evaluation.seeds;
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    const fs::path dir = fs::path(cfg.output_dir) / "ablation";
    fs::create_directories(dir);
    std::ofstream(dir / "effective_config.json") << to_json(cfg).dump(2) << '\n';

    struct Variant {
      std::string name;
      TrainMode mode;
      double lambda;
    };
    std::vector<Variant> variants{{"full", TrainMode::full, cfg.train.reward.lambda},
                                  {"no_ballast", TrainMode::no_ballast, cfg.train.reward.lambda},
                                  {"no_toxicity_step", TrainMode::no_toxicity_step,
                                   cfg.train.reward.lambda}};
    for (double l : cfg.evaluation.joint_lambdas) {
      char name[32];
      std::snprintf(name, sizeof name, "joint_%g", l);
      variants.push_back({name, TrainMode::joint, l});
    }

    std::optional<Dataset> shared;
    if (!cfg.data.resplit_per_seed) shared = prepare_dataset(cfg, cfg.data.split_seed);
    std::vector<MetricRow> rows;
    const std::string tmpl = prompt_template_for(cfg);
    for (const auto seed : seeds) {
      const Dataset data = shared ? *shared
                                  : prepare_dataset(cfg, derive_seed(cfg.data.split_seed, seed));
      auto phi = make_embedding(cfg, data.vocab);
      std::optional<LexiconToxicityOracle> oracle;
      if (!data.toxic_lexicon.empty()) oracle.emplace(data.toxic_lexicon);
      const auto budget = toxic_budget(data.low);
      const std::string split_hash =
          hex64(corpus_fingerprint(data.split.test, corpus_fingerprint(data.low.kept)));

      {
        const Corpus os = oversample_baseline(data.low.kept, budget, seed);
        const auto r = train_downstream(os, data.split.test, *phi, seed, cfg.evaluation.downstream);
        rows.push_back(
            {"oversample", seed, r.macro_f1, r.hate_f1, std::nan(""), {"0", "0", "0", split_hash}});
      }
      for (const auto& v : variants) {
        TrainConfig tc = seeded_train_config(cfg.train, seed);
        tc.mode = v.mode;
        tc.reward.lambda = v.lambda;
        const bool pool = v.mode != TrainMode::no_ballast;
        auto provider = pool ? make_provider(cfg, data, tc.provider_seed) : nullptr;
        Trainer trainer(tc, data.low.kept, phi, provider, pool ? tmpl : std::string());
        trainer.run();
        if (v.mode == TrainMode::no_ballast &&
            (trainer.provider_calls() != 0 || trainer.refinements() != 0)) {
          throw StateError("no_ballast run touched the provider or the ballast pool");
        }
        write_train_log(dir / v.name / ("seed_" + std::to_string(seed) + ".csv"), trainer.log());
        const Corpus aug = trainer.generate_augmentation(budget, derive_seed(seed, 77));
        const auto r = train_downstream(concat(data.low.kept, aug), data.split.test, *phi, seed,
                                        cfg.evaluation.downstream);
        const double tox = oracle && !aug.empty() ? avg_toxicity(aug, *oracle) : std::nan("");
        rows.push_back({v.name, seed, r.macro_f1, r.hate_f1, tox,
                        {std::to_string(trainer.provider_calls()),
                         std::to_string(trainer.refinements()),
                         std::to_string(trainer.reward_audit().violations), split_hash}});
        err << "ablation " << v.name << " seed " << seed << " done\n";
      }
    }
    write_report(dir / "ablation.csv", rows,
                 {"provider_calls", "refinements", "reward_violations", "split_hash"}, out);
    return static_cast<int>(kExitOk);
  });
}

int cmd_export_embeddings(const ExportArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.output.empty()) throw ConfigError("--output is required");
    if (args.corpora.empty()) throw ConfigError("at least one --corpus is required");
    const TrainedModel model = load_trained_model(args.checkpoint);
    RunConfig cfg;
    if (model.run.contains("embedding")) {
      const auto& e = model.run["embedding"];
      cfg.embedding.backend = e.value("backend", cfg.embedding.backend);
      cfg.embedding.dim = e.value("dim", cfg.embedding.dim);
      cfg.embedding.seed = e.value("seed", cfg.embedding.seed);
      cfg.embedding.endpoint = e.value("endpoint", cfg.embedding.endpoint);
      cfg.embedding.model = e.value("model", cfg.embedding.model);
    }
    if (args.embed_dim) cfg.embedding.dim = *args.embed_dim;
    if (args.embed_seed) cfg.embedding.seed = *args.embed_seed;
    const auto phi = make_embedding(cfg, model.vocab);

    if (args.output.has_parent_path()) fs::create_directories(args.output.parent_path());
    std::ofstream csv(args.output, std::ios::trunc);
    if (!csv) throw Error("cannot write " + args.output.string());
    csv << "source,label";
    for (std::size_t i = 0; i < phi->dim(); ++i) csv << ",v" << i;
    csv << '\n';
    std::size_t rows = 0;
    char buf[40];
    for (const auto& path : args.corpora) {
      const Corpus c = load_jsonl(path, model.labels, model.vocab);
      for (const auto& ex : c.examples()) {
        csv << source_name(ex.source) << ',' << model.labels.name_of(ex.label);
        for (double v : phi->embed(ex.seq).values) {
          std::snprintf(buf, sizeof buf, ",%.9g", v);
          csv << buf;
        }
        csv << '\n';
        ++rows;
      }
    }
    out << "wrote " << rows << " rows to " << args.output.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace toxigan
