#pragma once
// Data model: labels, vocabulary, labeled token sequences, and the dataset
// protocol (stratified split, low-resource simulation, synthetic task).

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace toxigan {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

enum class LabelKind { neutral, toxic, fake };

struct ClassLabel {
  int id = 0;
  LabelKind kind = LabelKind::neutral;
  std::string name;
};

/// Label space {neutral=0, toxic_1..toxic_K, fake=K+1}.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::string neutral_name, std::vector<std::string> toxic_names);

  int num_toxic() const { return static_cast<int>(toxic_.size()); }
  int num_real_classes() const { return num_toxic() + 1; }
  int num_heads() const { return num_toxic() + 2; }
  int fake_id() const { return num_toxic() + 1; }

  ClassLabel at(int id) const;
  /// Real label by name; SchemaError for anything else.
  int id_of(const std::string& name) const;
  const std::string& name_of(int id) const;
  std::vector<std::string> real_names() const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::string neutral_;
  std::vector<std::string> toxic_;
  std::string fake_ = "fake";
};

/// Bijective token <-> id map with reserved ids for pad/begin/end/unknown.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kNumReserved = 4;

  Vocabulary();

  TokenId add(const std::string& token);
  /// kUnk when absent.
  TokenId id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> index_;
};

enum class Source { real, generated, llm_neutral };
const char* source_name(Source s);

struct LabeledExample {
  TokenSequence seq;
  int label = 0;
  Source source = Source::real;

  bool operator==(const LabeledExample&) const = default;
};

/// Examples sharing one vocabulary and label space. The class index is kept
/// consistent by construction: examples are only added through add().
class Corpus {
 public:
  Corpus(std::shared_ptr<const Vocabulary> vocab, LabelSet labels);

  void add(LabeledExample ex);

  const std::vector<LabeledExample>& examples() const { return examples_; }
  const LabeledExample& operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  const Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  const LabelSet& labels() const { return labels_; }

  /// Indices of examples with the given label (empty for unseen labels).
  const std::vector<std::size_t>& class_indices(int label) const;
  std::size_t count(int label) const { return class_indices(label).size(); }

  /// Same vocabulary/labels, no examples.
  Corpus empty_like() const { return Corpus(vocab_, labels_); }
  Corpus filter_label(int label) const;

  std::string detokenize(const TokenSequence& seq) const;

  bool operator==(const Corpus& other) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  LabelSet labels_;
  std::vector<LabeledExample> examples_;
  std::vector<std::vector<std::size_t>> class_index_;
};

Corpus concat(const Corpus& a, const Corpus& b);

/// Lowercased whitespace tokenization.
std::vector<std::string> tokenize_text(const std::string& text);

/// Reads {"text": ..., "label": ...} objects, one per line. Blank lines and
/// lines starting with '#' are skipped. With `fixed_vocab` the text is
/// mapped through it (unknown words -> kUnk); otherwise a vocabulary is
/// built from the file itself.
Corpus load_jsonl(const std::filesystem::path& path, const LabelSet& labels,
                  std::shared_ptr<const Vocabulary> fixed_vocab = nullptr);

struct JsonlWriteOptions {
  std::optional<std::string> header_comment;
  bool include_source = false;
};
void write_jsonl(const std::filesystem::path& path, const Corpus& corpus,
                 const JsonlWriteOptions& options = {});

/// Maps every token through its string into `vocab` (kUnk when missing).
Corpus retokenize(const Corpus& corpus, std::shared_ptr<const Vocabulary> vocab);

/// Vocabulary covering exactly the tokens used by `corpus`.
std::shared_ptr<const Vocabulary> vocabulary_from(const Corpus& corpus);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct Split {
  Corpus train;
  Corpus val;
  Corpus test;
};

/// Stratified, seeded partition. Per class: val and test take
/// floor(n * ratio), train takes the remainder.
Split split_dataset(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed);

struct LowResource {
  Corpus kept;
  std::map<int, int> budget;  // label -> removed count (augmentation quota)
};

/// Keeps floor(n * keep_fraction) examples of each class (at least one when
/// the class is non-empty); the removed count becomes that class's budget.
LowResource simulate_low_resource(const Corpus& train, double keep_fraction,
                                  std::uint64_t seed);

struct SyntheticTaskSpec {
  std::shared_ptr<const Vocabulary> vocab;
  LabelSet labels;
  std::vector<TokenId> neutral_lexicon;
  std::vector<std::vector<TokenId>> toxic_lexicons;  // index k-1 for class k
  double mix_rate = 0.6;
  std::size_t min_len = 6;
  std::size_t max_len = 12;
  std::uint64_t seed = 0;

  /// Splits `content_vocab` tokens: half neutral, the rest evenly over the
  /// K toxic classes.
  static SyntheticTaskSpec standard(int K, std::size_t content_vocab, double mix_rate,
                                    std::size_t min_len, std::size_t max_len,
                                    std::uint64_t seed);

  void validate() const;
  std::vector<TokenId> toxic_union() const;
};

Corpus make_synthetic_corpus(const SyntheticTaskSpec& spec, std::size_t n_per_class);

/// Draws only from the neutral lexicon; used for held-out neutral pools.
Corpus make_synthetic_neutral(const SyntheticTaskSpec& spec, std::size_t n,
                              std::uint64_t seed);

}  // namespace toxigan
