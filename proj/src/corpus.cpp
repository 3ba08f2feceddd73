#include "toxigan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "toxigan/errors.hpp"
#include "toxigan/rng.hpp"

namespace toxigan {

LabelSet::LabelSet(std::string neutral_name, std::vector<std::string> toxic_names)
    : neutral_(std::move(neutral_name)), toxic_(std::move(toxic_names)) {
  if (toxic_.empty()) throw ConfigError("label set needs at least one toxic class");
  std::set<std::string> seen{neutral_};
  for (const auto& n : toxic_) {
    if (!seen.insert(n).second) throw ConfigError("duplicate label name: " + n);
  }
  if (seen.count(fake_)) throw ConfigError("label name 'fake' is reserved");
}

ClassLabel LabelSet::at(int id) const {
  if (id == 0) return {0, LabelKind::neutral, neutral_};
  if (id >= 1 && id <= num_toxic()) return {id, LabelKind::toxic, toxic_[id - 1]};
  if (id == fake_id()) return {id, LabelKind::fake, fake_};
  throw DomainError("label id out of range: " + std::to_string(id));
}

int LabelSet::id_of(const std::string& name) const {
  if (name == neutral_) return 0;
  for (int k = 0; k < num_toxic(); ++k) {
    if (toxic_[k] == name) return k + 1;
  }
  throw SchemaError("unknown label: " + name);
}

const std::string& LabelSet::name_of(int id) const {
  if (id == 0) return neutral_;
  if (id >= 1 && id <= num_toxic()) return toxic_[id - 1];
  if (id == fake_id()) return fake_;
  throw DomainError("label id out of range: " + std::to_string(id));
}

std::vector<std::string> LabelSet::real_names() const {
  std::vector<std::string> out{neutral_};
  out.insert(out.end(), toxic_.begin(), toxic_.end());
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
}

TokenId Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  // Reserved markers never come from text.
  if (it == index_.end() || it->second < kNumReserved) return kUnk;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw DomainError("token id out of range: " + std::to_string(id));
  return tokens_[id];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    h = fnv1a64(t.data(), t.size(), h);
    const char sep = '\n';
    h = fnv1a64(&sep, 1, h);
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write vocabulary: " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open vocabulary: " + path.string());
  Vocabulary v;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n < kNumReserved) {
      if (line != v.tokens_[n]) throw LoadError("vocabulary reserved tokens mismatch");
    } else {
      v.add(line);
    }
    ++n;
  }
  return v;
}

const char* source_name(Source s) {
  switch (s) {
    case Source::real: return "real";
    case Source::generated: return "generated";
    case Source::llm_neutral: return "llm_neutral";
  }
  return "unknown";
}

Corpus::Corpus(std::shared_ptr<const Vocabulary> vocab, LabelSet labels)
    : vocab_(std::move(vocab)), labels_(std::move(labels)) {
  class_index_.resize(static_cast<std::size_t>(labels_.num_real_classes()));
}

void Corpus::add(LabeledExample ex) {
  if (ex.label < 0 || ex.label >= labels_.num_real_classes()) {
    throw ContractViolation("example label must be neutral or toxic, got id " +
                            std::to_string(ex.label));
  }
  if (ex.seq.empty()) throw DomainError("empty token sequence");
  for (TokenId t : ex.seq) {
    if (t >= vocab_->size()) throw DomainError("token id outside vocabulary: " + std::to_string(t));
  }
  class_index_[static_cast<std::size_t>(ex.label)].push_back(examples_.size());
  examples_.push_back(std::move(ex));
}

const std::vector<std::size_t>& Corpus::class_indices(int label) const {
  static const std::vector<std::size_t> none;
  if (label < 0 || label >= static_cast<int>(class_index_.size())) return none;
  return class_index_[static_cast<std::size_t>(label)];
}

Corpus Corpus::filter_label(int label) const {
  Corpus out = empty_like();
  for (auto i : class_indices(label)) out.add(examples_[i]);
  return out;
}

std::string Corpus::detokenize(const TokenSequence& seq) const {
  std::string s;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) s += ' ';
    s += vocab_->token(seq[i]);
  }
  return s;
}

bool Corpus::operator==(const Corpus& other) const {
  return *vocab_ == *other.vocab_ && labels_ == other.labels_ && examples_ == other.examples_;
}

Corpus concat(const Corpus& a, const Corpus& b) {
  if (!(a.vocab() == b.vocab()) || !(a.labels() == b.labels())) {
    throw SchemaError("cannot concatenate corpora with different vocabularies or labels");
  }
  Corpus out = a;
  for (const auto& ex : b.examples()) out.add(ex);
  return out;
}

std::vector<std::string> tokenize_text(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string word;
  while (is >> word) {
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(word));
  }
  return out;
}

Corpus load_jsonl(const std::filesystem::path& path, const LabelSet& labels,
                  std::shared_ptr<const Vocabulary> fixed_vocab) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path.string());

  struct Row {
    std::vector<std::string> words;
    int label;
    Source source;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);
    if (!obj.contains("text") || !obj["text"].is_string()) {
      throw ParseError("missing string field \"text\"", lineno);
    }
    if (!obj.contains("label") || !obj["label"].is_string()) {
      throw ParseError("missing string field \"label\"", lineno);
    }
    int label;
    try {
      label = labels.id_of(obj["label"].get<std::string>());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    }
    Source source = Source::real;
    if (obj.contains("source")) {
      const auto& src = obj["source"];
      bool known = false;
      for (Source s : {Source::real, Source::generated, Source::llm_neutral}) {
        if (src.is_string() && src.get<std::string>() == source_name(s)) {
          source = s;
          known = true;
        }
      }
      if (!known) throw ParseError("unknown \"source\" value", lineno);
    }
    auto words = tokenize_text(obj["text"].get<std::string>());
    if (words.empty()) throw ParseError("empty text", lineno);
    rows.push_back({std::move(words), label, source});
  }

  std::shared_ptr<const Vocabulary> vocab = fixed_vocab;
  if (!vocab) {
    auto built = std::make_shared<Vocabulary>();
    for (const auto& r : rows) {
      for (const auto& w : r.words) built->add(w);
    }
    vocab = std::move(built);
  }
  Corpus corpus(vocab, labels);
  for (auto& r : rows) {
    TokenSequence seq;
    seq.reserve(r.words.size());
    for (const auto& w : r.words) seq.push_back(vocab->id(w));
    corpus.add({std::move(seq), r.label, r.source});
  }
  return corpus;
}

void write_jsonl(const std::filesystem::path& path, const Corpus& corpus,
                 const JsonlWriteOptions& options) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  if (options.header_comment) out << "# " << *options.header_comment << '\n';
  for (const auto& ex : corpus.examples()) {
    nlohmann::ordered_json obj;
    obj["text"] = corpus.detokenize(ex.seq);
    obj["label"] = corpus.labels().name_of(ex.label);
    if (options.include_source) obj["source"] = source_name(ex.source);
    out << obj.dump() << '\n';
  }
}

Corpus retokenize(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab) {
  Corpus out(vocab, corpus.labels());
  for (const auto& ex : corpus.examples()) {
    LabeledExample copy = ex;
    for (auto& t : copy.seq) t = vocab->id(corpus.vocab().token(t));
    out.add(std::move(copy));
  }
  return out;
}

std::shared_ptr<const Vocabulary> vocabulary_from(const Corpus& corpus) {
  auto vocab = std::make_shared<Vocabulary>();
  for (const auto& ex : corpus.examples()) {
    for (TokenId t : ex.seq) {
      if (t >= Vocabulary::kNumReserved) vocab->add(corpus.vocab().token(t));
    }
  }
  return vocab;
}

namespace {

std::size_t floor_count(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}

std::vector<std::size_t> shuffled(std::vector<std::size_t> idx, Rng& rng) {
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  return idx;
}

}  // namespace

Split split_dataset(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0)) {
    throw ConfigError("split ratios must all be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  Rng rng(seed);
  std::vector<char> bucket(corpus.size(), 0);
  for (int label = 0; label < corpus.labels().num_real_classes(); ++label) {
    const auto& members = corpus.class_indices(label);
    if (members.empty()) {
      throw ConfigError("class '" + corpus.labels().name_of(label) +
                        "' has no examples to split");
    }
    const auto order = shuffled(members, rng);
    const std::size_t n_val = floor_count(order.size(), ratios.val);
    const std::size_t n_test = floor_count(order.size(), ratios.test);
    if (n_val == 0 || n_test == 0 || n_val + n_test >= order.size()) {
      throw ConfigError("class '" + corpus.labels().name_of(label) + "' with " +
                        std::to_string(order.size()) +
                        " examples leaves an empty stratified split");
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      bucket[order[i]] = i < n_val ? 1 : (i < n_val + n_test ? 2 : 0);
    }
  }
  Split s{corpus.empty_like(), corpus.empty_like(), corpus.empty_like()};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Corpus& dst = bucket[i] == 0 ? s.train : (bucket[i] == 1 ? s.val : s.test);
    dst.add(corpus[i]);
  }
  return s;
}

LowResource simulate_low_resource(const Corpus& train, double keep_fraction,
                                  std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("keep_fraction must lie in (0, 1]");
  }
  Rng rng(seed);
  std::vector<char> keep(train.size(), 0);
  LowResource out{train.empty_like(), {}};
  for (int label = 0; label < train.labels().num_real_classes(); ++label) {
    const auto& members = train.class_indices(label);
    if (members.empty()) {
      out.budget[label] = 0;
      continue;
    }
    const auto order = shuffled(members, rng);
    const std::size_t n_keep = std::max<std::size_t>(1, floor_count(order.size(), keep_fraction));
    for (std::size_t i = 0; i < n_keep; ++i) keep[order[i]] = 1;
    out.budget[label] = static_cast<int>(order.size() - n_keep);
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (keep[i]) out.kept.add(train[i]);
  }
  return out;
}

SyntheticTaskSpec SyntheticTaskSpec::standard(int K, std::size_t content_vocab, double mix_rate,
                                              std::size_t min_len, std::size_t max_len,
                                              std::uint64_t seed) {
  if (K < 1) throw ConfigError("synthetic task needs K >= 1");
  const std::size_t n_neutral = content_vocab / 2;
  const std::size_t per_toxic = (content_vocab - n_neutral) / static_cast<std::size_t>(K);
  if (n_neutral == 0 || per_toxic == 0) {
    throw ConfigError("content_vocab too small for " + std::to_string(K) + " toxic classes");
  }
  auto vocab = std::make_shared<Vocabulary>();
  SyntheticTaskSpec spec;
  for (std::size_t j = 0; j < n_neutral; ++j) {
    spec.neutral_lexicon.push_back(vocab->add("n" + std::to_string(j)));
  }
  std::vector<std::string> names;
  for (int k = 1; k <= K; ++k) {
    names.push_back("toxic" + std::to_string(k));
    std::vector<TokenId> lex;
    for (std::size_t j = 0; j < per_toxic; ++j) {
      lex.push_back(vocab->add("t" + std::to_string(k) + "_" + std::to_string(j)));
    }
    spec.toxic_lexicons.push_back(std::move(lex));
  }
  spec.vocab = std::move(vocab);
  spec.labels = LabelSet("neutral", std::move(names));
  spec.mix_rate = mix_rate;
  spec.min_len = min_len;
  spec.max_len = max_len;
  spec.seed = seed;
  return spec;
}

void SyntheticTaskSpec::validate() const {
  if (!vocab) throw ConfigError("synthetic spec has no vocabulary");
  if (static_cast<int>(toxic_lexicons.size()) != labels.num_toxic()) {
    throw ConfigError("one toxic lexicon per toxic class required");
  }
  if (!(mix_rate > 0.0 && mix_rate <= 1.0)) throw ConfigError("mix_rate must lie in (0, 1]");
  if (min_len < 1 || max_len < min_len) throw ConfigError("invalid synthetic length range");
  if (neutral_lexicon.empty()) throw ConfigError("neutral lexicon is empty");
  std::set<TokenId> seen;
  auto claim = [&](const std::vector<TokenId>& lex) {
    for (TokenId t : lex) {
      if (t >= vocab->size()) throw ConfigError("lexicon token outside vocabulary");
      if (!seen.insert(t).second) throw ConfigError("synthetic lexicons are not disjoint");
    }
  };
  claim(neutral_lexicon);
  for (const auto& lex : toxic_lexicons) {
    if (lex.empty()) throw ConfigError("toxic lexicon is empty");
    claim(lex);
  }
}

std::vector<TokenId> SyntheticTaskSpec::toxic_union() const {
  std::vector<TokenId> out;
  for (const auto& lex : toxic_lexicons) out.insert(out.end(), lex.begin(), lex.end());
  return out;
}

namespace {

TokenSequence draw_sequence(const SyntheticTaskSpec& spec, int label, Rng& rng) {
  const std::size_t len = spec.min_len + rng.index(spec.max_len - spec.min_len + 1);
  TokenSequence seq(len);
  for (auto& t : seq) {
    if (label > 0 && rng.bernoulli(spec.mix_rate)) {
      const auto& lex = spec.toxic_lexicons[static_cast<std::size_t>(label - 1)];
      t = lex[rng.index(lex.size())];
    } else {
      t = spec.neutral_lexicon[rng.index(spec.neutral_lexicon.size())];
    }
  }
  return seq;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticTaskSpec& spec, std::size_t n_per_class) {
  spec.validate();
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  Rng rng(spec.seed);
  Corpus corpus(spec.vocab, spec.labels);
  for (int label = 0; label < spec.labels.num_real_classes(); ++label) {
    for (std::size_t n = 0; n < n_per_class; ++n) {
      corpus.add({draw_sequence(spec, label, rng), label, Source::real});
    }
  }
  return corpus;
}

Corpus make_synthetic_neutral(const SyntheticTaskSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Corpus corpus(spec.vocab, spec.labels);
  for (std::size_t i = 0; i < n; ++i) corpus.add({draw_sequence(spec, 0, rng), 0, Source::real});
  return corpus;
}

}  // namespace toxigan
