#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lscd/align.hpp"
#include "lscd/context.hpp"
#include "lscd/corpus.hpp"

namespace lscd {

enum class ModelTag { ContextFree, ContextDependent, Circe };

std::string_view to_string(ModelTag m);
ModelTag parse_model_tag(std::string_view s);

struct ScoreEntry {
  std::string word;
  std::optional<double> score;  // nullopt: unscorable
  std::string status = "ok";    // reason when unscorable
};

/// One entry per target, in target order. Larger scores mean more change.
struct ChangeScores {
  ModelTag model = ModelTag::ContextFree;
  std::vector<ScoreEntry> entries;

  std::vector<std::string> words() const;
  std::size_t unscorable_count() const;
};

/// Euclidean distance between the rotated t1 vector and the t2 vector.
ChangeScores static_score(const AlignedPair& aligned, const TargetList& targets);

struct PairBudget {
  std::uint64_t max_pairs = 0;  // 0: exact
  std::uint64_t seed = 1;
};

/// Mean pairwise Euclidean distance over all |a|*|b| pairs, or over
/// max_pairs pairs sampled uniformly with replacement when the budget is
/// smaller than the pair count. Throws InvalidArgument on an empty set.
double mpe_distance(const UseSet& a, const UseSet& b, const PairBudget& budget = {});

/// MPE per target. Targets without uses in a period are unscorable
/// ("no t1 uses" / "no t2 uses").
ChangeScores contextual_score(std::span<const UseSet> uses_t1, std::span<const UseSet> uses_t2,
                              const TargetList& targets, const PairBudget& budget = {});

/// TSV: model, word, score, status.
void save_scores_tsv(std::span<const ChangeScores> scores, const std::string& path);
std::string format_scores_tsv(std::span<const ChangeScores> scores);
std::vector<ChangeScores> load_scores_tsv(const std::string& path);

}  // namespace lscd
