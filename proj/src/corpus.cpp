#include "lscd/corpus.hpp"

#include <algorithm>
#include <sstream>

#include "lscd/error.hpp"
#include "lscd/rng.hpp"
#include "lscd/text.hpp"

namespace lscd {

std::string_view to_string(Period p) { return p == Period::T1 ? "t1" : "t2"; }

Period parse_period(std::string_view s) {
  if (s == "t1" || s == "T1" || s == "1") return Period::T1;
  if (s == "t2" || s == "T2" || s == "2") return Period::T2;
  throw InvalidArgument("unknown period '" + std::string(s) + "' (expected t1 or t2)");
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

Corpus parse_corpus(std::string_view text, Period period) {
  Corpus c;
  c.period = period;
  for (auto line : split_on(text, '\n')) {
    auto tokens = split_ws(line);
    if (!tokens.empty()) c.sentences.push_back(std::move(tokens));
  }
  if (c.sentences.empty()) throw EmptyCorpusError("corpus contains no sentences");
  return c;
}

Corpus load_corpus(const std::string& path, Period period) {
  try {
    return parse_corpus(read_file(path), period);
  } catch (const EmptyCorpusError&) {
    throw EmptyCorpusError("corpus '" + path + "' contains no sentences");
  }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += s[i];
    }
    out += '\n';
  }
  write_file(path, out);
}

TargetList::TargetList(std::vector<std::string> words) : words_(std::move(words)) {
  for (const auto& w : words_) {
    if (!index_.insert(w).second) throw InvalidArgument("duplicate target word '" + w + "'");
  }
}

TargetList load_targets(const std::string& path) {
  std::vector<std::string> words;
  const std::string text = read_file(path);
  for (auto line : split_on(text, '\n')) {
    auto w = trim(line);
    if (!w.empty()) words.emplace_back(w);
  }
  return TargetList(std::move(words));
}

Vocabulary Vocabulary::build(const Corpus& c1, const Corpus& c2) {
  Vocabulary v;
  for (const Corpus* c : {&c1, &c2}) {
    const bool first = (c == &c1);
    for (const auto& s : c->sentences) {
      for (const auto& tok : s) {
        auto [it, inserted] = v.ids_.try_emplace(tok, v.words_.size());
        if (inserted) {
          v.words_.push_back(tok);
          v.count_t1_.push_back(0);
          v.count_t2_.push_back(0);
        }
        ++(first ? v.count_t1_ : v.count_t2_)[it->second];
      }
    }
  }
  return v;
}

std::optional<std::size_t> Vocabulary::id(const std::string& w) const {
  auto it = ids_.find(w);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::total_count(const std::string& w) const {
  auto i = id(w);
  return i ? count_t1_[*i] + count_t2_[*i] : 0;
}

std::unordered_set<std::string> Vocabulary::corpus_unique_words() const {
  std::unordered_set<std::string> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if ((count_t1_[i] == 0) != (count_t2_[i] == 0)) out.insert(words_[i]);
  }
  return out;
}

std::optional<std::uint64_t> frequency_threshold(std::uint64_t total_sentences) {
  if (total_sentences < 1'000'000) return std::nullopt;
  return total_sentences / 50'000;
}

Corpus apply_threshold(const Corpus& corpus, const Vocabulary& vocab, std::uint64_t threshold,
                       const TargetList& targets) {
  if (threshold == 0) return corpus;
  Corpus out;
  out.period = corpus.period;
  out.sentences.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) {
    Sentence kept;
    kept.reserve(s.size());
    for (const auto& tok : s) {
      if (targets.contains(tok) || vocab.total_count(tok) >= threshold) kept.push_back(tok);
    }
    if (!kept.empty()) out.sentences.push_back(std::move(kept));
  }
  return out;
}

std::size_t TimeClfDataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(examples.begin(), examples.end(), [s](const ClfExample& e) { return e.split == s; }));
}

std::size_t TimeClfDataset::count(Split s, Period p) const {
  return static_cast<std::size_t>(std::count_if(examples.begin(), examples.end(), [s, p](const ClfExample& e) {
    return e.split == s && e.label == p;
  }));
}

std::string reserve_mask_token(const Corpus& c1, const Corpus& c2, std::string_view preferred) {
  std::unordered_set<std::string_view> seen;
  for (const Corpus* c : {&c1, &c2}) {
    for (const auto& s : c->sentences) {
      for (const auto& tok : s) seen.insert(tok);
    }
  }
  std::string token(preferred);
  while (seen.count(token)) token += '_';
  return token;
}

Corpus mask_corpus(const Corpus& corpus, const std::unordered_set<std::string>& words,
                   const std::string& mask_token) {
  Corpus out = corpus;
  if (words.empty()) return out;
  for (auto& s : out.sentences) {
    for (auto& tok : s) {
      if (words.count(tok)) tok = mask_token;
    }
  }
  return out;
}

namespace {

// Indices of `keep` sentences drawn uniformly without replacement, in corpus order.
std::vector<std::size_t> downsample(std::size_t size, std::size_t keep, Rng& rng) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  if (keep < size) {
    // partial Fisher-Yates
    for (std::size_t i = 0; i < keep; ++i) {
      std::size_t j = i + rng.index(size - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

}  // namespace

TimeClfDataset build_clf_dataset(const Corpus& c1, const Corpus& c2, const ClfDatasetOptions& options,
                                 std::uint64_t seed) {
  if (c1.sentences.empty() || c2.sentences.empty()) {
    throw EmptyCorpusError("classification dataset needs two non-empty corpora");
  }
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  TimeClfDataset ds;
  ds.masked = options.masked;

  std::unordered_set<std::string> unique;
  if (options.masked) {
    ds.mask_token = reserve_mask_token(c1, c2, options.mask_token);
    unique = Vocabulary::build(c1, c2).corpus_unique_words();
    ds.masked_words.assign(unique.begin(), unique.end());
    std::sort(ds.masked_words.begin(), ds.masked_words.end());
  }

  const std::size_t n = std::min(c1.sentences.size(), c2.sentences.size());
  const std::size_t n_train = static_cast<std::size_t>(std::llround(options.train_fraction * n));

  for (const auto* c : {&c1, &c2}) {
    const Period label = (c == &c1) ? Period::T1 : Period::T2;
    auto picked = downsample(c->sentences.size(), n, rng);
    // stratified split: shuffle this label's examples, first n_train go to train
    std::vector<std::size_t> order(picked.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<Split> split(picked.size(), Split::Test);
    for (std::size_t i = 0; i < n_train; ++i) split[order[i]] = Split::Train;

    for (std::size_t i = 0; i < picked.size(); ++i) {
      ClfExample ex{c->sentences[picked[i]], label, split[i]};
      if (options.masked) {
        for (auto& tok : ex.tokens) {
          if (unique.count(tok)) tok = ds.mask_token;
        }
      }
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

void export_dataset_tsv(const TimeClfDataset& ds, const std::string& path) {
  std::string out;
  if (ds.masked) {
    out += "#mask\t" + ds.mask_token + "\t";
    for (std::size_t i = 0; i < ds.masked_words.size(); ++i) {
      if (i) out += ' ';
      out += ds.masked_words[i];
    }
    out += '\n';
  }
  out += "label\tsplit\tsentence\n";
  for (const auto& ex : ds.examples) {
    out += to_string(ex.label);
    out += '\t';
    out += ex.split == Split::Train ? "train" : "test";
    out += '\t';
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) out += ' ';
      out += ex.tokens[i];
    }
    out += '\n';
  }
  write_file(path, out);
}

TimeClfDataset import_dataset_tsv(const std::string& path) {
  TimeClfDataset ds;
  std::size_t line_no = 0;
  const std::string text = read_file(path);
  for (auto line : split_on(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split_on(line, '\t');
    if (ds.examples.empty() && f[0] == "#mask") {
      if (f.size() != 3) throw FormatError("expected '#mask<TAB>token<TAB>words'", line_no);
      ds.masked = true;
      ds.mask_token = std::string(f[1]);
      ds.masked_words = split_ws(f[2]);
      continue;
    }
    if (ds.examples.empty() && line.rfind("label\t", 0) == 0) continue;
    if (f.size() != 3) throw FormatError("expected 3 tab-separated columns", line_no);
    ClfExample ex;
    ex.label = parse_period(f[0]);
    if (f[1] == "train") {
      ex.split = Split::Train;
    } else if (f[1] == "test") {
      ex.split = Split::Test;
    } else {
      throw FormatError("split must be train or test", line_no);
    }
    ex.tokens = split_ws(f[2]);
    if (ex.tokens.empty()) throw FormatError("empty sentence", line_no);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace lscd
