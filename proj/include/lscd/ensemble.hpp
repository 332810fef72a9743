#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lscd/scoring.hpp"

namespace lscd {

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Word -> rank, parallel vectors in target order. Higher rank = more change.
struct Ranking {
  std::vector<std::string> words;
  std::vector<double> ranks;
  std::string source;

  std::size_t size() const { return words.size(); }
  double rank_of(const std::string& w) const;
};

/// Scores with unscorable entries replaced by the median of the scored ones
/// (0 when none is scored).
std::vector<double> fill_unscorable(const ChangeScores& scores);

Ranking ranks_from_scores(const ChangeScores& scores);

enum class ThetaSource { Heuristic, Manual, GridSearch };

struct Theta {
  double value = 0.0;
  ThetaSource source = ThetaSource::Manual;
};

/// 2 * (acc - 0.5), clamped to [0, 1]. Throws InvalidArgument when acc is
/// outside [0, 1].
Theta theta_from_accuracy(double accuracy);

/// Throws InvalidArgument outside [0, 1].
Theta manual_theta(double value);

/// theta * r_cd + (1 - theta) * r_cf, re-ranked. Output follows r_cf's word
/// order. Throws InvalidArgument listing the symmetric difference when the
/// word sets differ.
Ranking combine(const Ranking& r_cf, const Ranking& r_cd, const Theta& theta);

/// Grid {0, step, ..., 1} maximizing Spearman's rho against gold; the
/// smallest maximizer wins ties.
Theta grid_search_theta(const Ranking& r_cf, const Ranking& r_cd, const std::map<std::string, double>& gold,
                        double step);

/// The ceil(n/2) highest-ranked words are changed (true). Ties at the cut
/// favour the lexicographically larger word.
std::map<std::string, bool> binarize(const Ranking& r);

/// "word<TAB>rank" per line in ranking order.
std::string format_graded_answer(const Ranking& r);
/// "word<TAB>0|1" per line in ranking order.
std::string format_binary_answer(const Ranking& r, const std::map<std::string, bool>& labels);

}  // namespace lscd
