#include "lscd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "lscd/error.hpp"
#include "lscd/rng.hpp"
#include "lscd/text.hpp"

namespace lscd {

std::map<std::string, double> parse_word_values(std::string_view text) {
  std::map<std::string, double> out;
  std::size_t ln = 0;
  for (auto line : split_on(text, '\n')) {
    ++ln;
    if (trim(line).empty()) continue;
    auto f = split_on(trim(line), '\t');
    if (f.size() != 2) throw FormatError("expected 'word<TAB>value'", ln);
    double v;
    try {
      v = parse_double(f[1]);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), ln);
    }
    if (!out.emplace(std::string(f[0]), v).second) throw FormatError("duplicate word '" + std::string(f[0]) + "'", ln);
  }
  return out;
}

std::map<std::string, double> load_word_values(const std::string& path) { return parse_word_values(read_file(path)); }

GoldData load_gold(const std::string& graded_path, const std::string& binary_path) {
  GoldData g;
  g.graded = load_word_values(graded_path);
  if (!binary_path.empty()) {
    std::map<std::string, bool> bin;
    for (const auto& [w, v] : load_word_values(binary_path)) {
      if (v != 0.0 && v != 1.0) throw FormatError("binary gold label for '" + w + "' must be 0 or 1");
      bin[w] = v == 1.0;
    }
    g.binary = std::move(bin);
  }
  return g;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman: inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("spearman is undefined for fewer than 2 items");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);  // same for any average ranking
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("spearman is undefined when one side is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {
template <typename Pred>
std::vector<double> gold_in_order(const std::vector<std::string>& words, const std::map<std::string, Pred>& gold) {
  std::set<std::string> pw(words.begin(), words.end());
  std::set<std::string> gw;
  for (const auto& [w, v] : gold) gw.insert(w);
  if (pw != gw || pw.size() != words.size()) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(pw.begin(), pw.end(), gw.begin(), gw.end(), std::back_inserter(diff));
    std::string msg = "prediction and gold cover different words:";
    for (const auto& w : diff) msg += " " + w;
    throw InvalidArgument(msg);
  }
  std::vector<double> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(static_cast<double>(gold.at(w)));
  return out;
}
}  // namespace

double spearman(const Ranking& pred, const std::map<std::string, double>& gold) {
  const auto g = gold_in_order(pred.words, gold);
  return spearman_rho(pred.ranks, g);
}

double spearman(const ChangeScores& pred, const std::map<std::string, double>& gold) {
  const auto g = gold_in_order(pred.words(), gold);
  return spearman_rho(fill_unscorable(pred), g);
}

double binary_accuracy(const std::map<std::string, bool>& pred, const std::map<std::string, bool>& gold) {
  std::vector<std::string> words;
  for (const auto& [w, v] : pred) words.push_back(w);
  gold_in_order(words, gold);
  if (words.empty()) throw InvalidArgument("binary_accuracy needs at least one word");
  std::size_t correct = 0;
  for (const auto& [w, v] : pred) correct += gold.at(w) == v;
  return static_cast<double>(correct) / static_cast<double>(words.size());
}

namespace {

struct Pools {
  int topics;
  int words_per_topic;
  int shared;

  std::string topic_word(char pool, int topic, int k) const {
    return std::string("ctx") + pool + std::to_string(topic) + "_" + std::to_string(k);
  }
  std::string shared_word(int k) const { return "fn" + std::to_string(k); }
};

Sentence context_sentence(const Pools& pools, char pool, int topic, int length, Rng& rng) {
  Sentence s;
  s.reserve(static_cast<std::size_t>(length) + 1);
  for (int i = 0; i < length; ++i) {
    if (pools.shared > 0 && rng.uniform01() < 0.2) {
      s.push_back(pools.shared_word(static_cast<int>(rng.index(static_cast<std::uint64_t>(pools.shared)))));
    } else {
      s.push_back(pools.topic_word(pool, topic, static_cast<int>(rng.index(static_cast<std::uint64_t>(pools.words_per_topic)))));
    }
  }
  return s;
}

}  // namespace

SyntheticBenchmark generate_shift_benchmark(std::size_t n_targets, const std::vector<double>& degrees,
                                            std::size_t base_sentences, std::uint64_t seed,
                                            const BenchmarkOptions& options) {
  if (degrees.size() != n_targets) throw InvalidArgument("need one shift degree per target");
  for (double d : degrees) {
    if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("shift degrees must lie in [0, 1]");
  }
  if (n_targets == 0) throw InvalidArgument("need at least one target");
  if (options.pool_topics < 1 || options.words_per_topic < 1 || options.sentence_length < 1) {
    throw InvalidArgument("benchmark pools and sentence length must be positive");
  }

  const Pools pools{options.pool_topics, options.words_per_topic, options.shared_words};
  std::size_t per_target = options.occurrences_per_target;
  if (per_target == 0) per_target = base_sentences / (4 * n_targets);
  per_target = std::max(per_target, options.min_occurrences);
  const std::size_t target_sentences = per_target * n_targets;
  const std::size_t background = base_sentences > target_sentences ? base_sentences - target_sentences : 0;

  SyntheticBenchmark bench;
  bench.seed = seed;
  bench.degrees = degrees;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_targets; ++i) names.push_back("target" + std::to_string(i));
  bench.targets = TargetList(names);

  Rng rng(seed);
  for (Corpus* c : {&bench.t1, &bench.t2}) {
    const bool later = (c == &bench.t2);
    c->period = later ? Period::T2 : Period::T1;
    for (std::size_t k = 0; k < background; ++k) {
      const char pool = rng.uniform01() < 0.5 ? 'a' : 'b';
      const int topic = static_cast<int>(rng.index(static_cast<std::uint64_t>(pools.topics)));
      c->sentences.push_back(context_sentence(pools, pool, topic, options.sentence_length, rng));
    }
    for (std::size_t t = 0; t < n_targets; ++t) {
      const int topic = static_cast<int>(t % static_cast<std::size_t>(pools.topics));
      std::vector<char> contexts(per_target, 'a');
      if (later) {
        const auto moved = static_cast<std::size_t>(std::llround(degrees[t] * static_cast<double>(per_target)));
        std::fill(contexts.begin(), contexts.begin() + static_cast<std::ptrdiff_t>(moved), 'b');
        rng.shuffle(contexts);
        bench.realized_b_fraction.push_back(static_cast<double>(moved) / static_cast<double>(per_target));
      }
      for (char pool : contexts) {
        auto s = context_sentence(pools, pool, topic, options.sentence_length, rng);
        const auto pos = rng.index(s.size() + 1);
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos), names[t]);
        c->sentences.push_back(std::move(s));
      }
    }
    rng.shuffle(c->sentences);
  }
  return bench;
}

BenchmarkFiles save_benchmark(const SyntheticBenchmark& bench, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  BenchmarkFiles f{(base / "t1.txt").string(), (base / "t2.txt").string(), (base / "targets.txt").string(),
                   (base / "gold.txt").string()};
  save_corpus(bench.t1, f.corpus_t1);
  save_corpus(bench.t2, f.corpus_t2);
  std::string targets, gold;
  for (std::size_t i = 0; i < bench.targets.size(); ++i) {
    targets += bench.targets.words()[i] + "\n";
    gold += bench.targets.words()[i] + "\t" + format_double(bench.realized_b_fraction[i]) + "\n";
  }
  write_file(f.targets, targets);
  write_file(f.gold, gold);
  return f;
}

}  // namespace lscd
