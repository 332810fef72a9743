#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lscd/corpus.hpp"
#include "lscd/ensemble.hpp"

namespace lscd {

struct GoldData {
  std::map<std::string, double> graded;
  std::optional<std::map<std::string, bool>> binary;
};

/// "word<TAB>value" per line.
std::map<std::string, double> load_word_values(const std::string& path);
std::map<std::string, double> parse_word_values(std::string_view text);
GoldData load_gold(const std::string& graded_path, const std::string& binary_path = {});

/// Tie-corrected Spearman: average ranks on both sides, then Pearson.
/// Throws InvalidArgument for length mismatch, n < 2 or a constant side.
double spearman_rho(std::span<const double> x, std::span<const double> y);

double spearman(const Ranking& pred, const std::map<std::string, double>& gold);
double spearman(const ChangeScores& pred, const std::map<std::string, double>& gold);

double binary_accuracy(const std::map<std::string, bool>& pred, const std::map<std::string, bool>& gold);

struct BenchmarkOptions {
  int pool_topics = 20;       // topics per context pool
  int words_per_topic = 20;
  int sentence_length = 10;
  int shared_words = 40;      // topic-neutral words used in both pools
  std::size_t min_occurrences = 50;
  std::size_t occurrences_per_target = 0;  // 0: base_sentences / (4 * n_targets), at least min_occurrences
};

struct SyntheticBenchmark {
  Corpus t1;
  Corpus t2;
  TargetList targets;
  std::vector<double> degrees;
  /// Per target, the fraction of t2 occurrences set in pool-B contexts.
  std::vector<double> realized_b_fraction;
  std::uint64_t seed = 0;
};

/// Two corpora built from disjoint context pools A and B. Target i appears
/// only in A contexts in t1; in t2 a share degrees[i] of its occurrences
/// (exact up to rounding) moves to B contexts.
SyntheticBenchmark generate_shift_benchmark(std::size_t n_targets, const std::vector<double>& degrees,
                                            std::size_t base_sentences, std::uint64_t seed,
                                            const BenchmarkOptions& options = {});

struct BenchmarkFiles {
  std::string corpus_t1, corpus_t2, targets, gold;
};

/// Writes t1.txt, t2.txt, targets.txt and gold.txt (realized shift per target)
/// into dir, creating it if needed.
BenchmarkFiles save_benchmark(const SyntheticBenchmark& bench, const std::string& dir);

}  // namespace lscd
