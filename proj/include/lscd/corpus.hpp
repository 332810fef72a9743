#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lscd {

enum class Period { T1, T2 };

std::string_view to_string(Period p);
Period parse_period(std::string_view s);

using Sentence = std::vector<std::string>;

/// Tokenized sentences from one time period. Sentences are never empty.
struct Corpus {
  Period period = Period::T1;
  std::vector<Sentence> sentences;

  std::size_t sentence_count() const { return sentences.size(); }
  std::size_t token_count() const;
};

/// Reads one sentence per line, whitespace tokenized. Blank lines are dropped.
/// Throws IoError when the file cannot be read, EmptyCorpusError when no
/// sentence remains.
Corpus load_corpus(const std::string& path, Period period);

/// Parses corpus text already in memory; same rules as load_corpus.
Corpus parse_corpus(std::string_view text, Period period);

void save_corpus(const Corpus& corpus, const std::string& path);

/// Ordered, duplicate-free list of target words.
class TargetList {
 public:
  TargetList() = default;
  /// Throws InvalidArgument on a duplicate word.
  explicit TargetList(std::vector<std::string> words);

  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool contains(const std::string& w) const { return index_.count(w) != 0; }

 private:
  std::vector<std::string> words_;
  std::unordered_set<std::string> index_;
};

TargetList load_targets(const std::string& path);

/// Joint vocabulary over the two corpora with per-period counts.
class Vocabulary {
 public:
  static Vocabulary build(const Corpus& c1, const Corpus& c2);

  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t id) const { return words_[id]; }
  std::optional<std::size_t> id(const std::string& w) const;

  std::uint64_t count_t1(std::size_t id) const { return count_t1_[id]; }
  std::uint64_t count_t2(std::size_t id) const { return count_t2_[id]; }
  std::uint64_t total_count(const std::string& w) const;

  /// Words seen in exactly one of the two corpora.
  std::unordered_set<std::string> corpus_unique_words() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<std::uint64_t> count_t1_;
  std::vector<std::uint64_t> count_t2_;
};

/// Minimum joint frequency for the context-free model, or nullopt when the
/// combined corpora hold fewer than 10^6 sentences.
std::optional<std::uint64_t> frequency_threshold(std::uint64_t total_sentences);

/// Drops token occurrences whose joint frequency is strictly below
/// `threshold`. Targets are kept regardless of frequency. Sentences left
/// empty are removed.
Corpus apply_threshold(const Corpus& corpus, const Vocabulary& vocab, std::uint64_t threshold,
                       const TargetList& targets = {});

enum class Split { Train, Test };

struct ClfExample {
  Sentence tokens;
  Period label;
  Split split;
};

/// Balanced sentence time-classification data.
struct TimeClfDataset {
  std::vector<ClfExample> examples;
  bool masked = false;
  std::string mask_token;
  /// Tokens replaced by mask_token (empty when unmasked).
  std::vector<std::string> masked_words;

  std::size_t count(Split s) const;
  std::size_t count(Split s, Period p) const;
};

inline constexpr std::string_view kDefaultMaskToken = "[MASK]";

/// Returns `preferred`, extended with '_' until it occurs in neither corpus.
std::string reserve_mask_token(const Corpus& c1, const Corpus& c2,
                               std::string_view preferred = kDefaultMaskToken);

/// Replaces every token in `words` with `mask_token`.
Corpus mask_corpus(const Corpus& corpus, const std::unordered_set<std::string>& words,
                   const std::string& mask_token);

struct ClfDatasetOptions {
  bool masked = true;
  double train_fraction = 0.8;
  std::string mask_token = std::string(kDefaultMaskToken);
};

/// Downsamples the larger corpus to the smaller one's size, optionally masks
/// corpus-unique tokens, then splits each label stratified 0.8/0.2. Fully
/// determined by (c1, c2, options, seed).
TimeClfDataset build_clf_dataset(const Corpus& c1, const Corpus& c2, const ClfDatasetOptions& options,
                                 std::uint64_t seed);

/// TSV with columns label, split, sentence.
void export_dataset_tsv(const TimeClfDataset& ds, const std::string& path);
TimeClfDataset import_dataset_tsv(const std::string& path);

}  // namespace lscd
