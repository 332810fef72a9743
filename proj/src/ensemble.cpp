#include "lscd/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "lscd/error.hpp"
#include "lscd/eval.hpp"
#include "lscd/text.hpp"

namespace lscd {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank mean(i+1 .. j+1)
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double Ranking::rank_of(const std::string& w) const {
  auto it = std::find(words.begin(), words.end(), w);
  if (it == words.end()) throw InvalidArgument("word '" + w + "' is not ranked");
  return ranks[static_cast<std::size_t>(it - words.begin())];
}

std::vector<double> fill_unscorable(const ChangeScores& scores) {
  std::vector<double> scored;
  for (const auto& e : scores.entries) {
    if (e.score) scored.push_back(*e.score);
  }
  double median = 0.0;
  if (!scored.empty()) {
    std::sort(scored.begin(), scored.end());
    const std::size_t m = scored.size() / 2;
    median = scored.size() % 2 ? scored[m] : 0.5 * (scored[m - 1] + scored[m]);
  }
  std::vector<double> out;
  out.reserve(scores.entries.size());
  for (const auto& e : scores.entries) out.push_back(e.score ? *e.score : median);
  return out;
}

Ranking ranks_from_scores(const ChangeScores& scores) {
  Ranking r;
  r.words = scores.words();
  const auto values = fill_unscorable(scores);
  r.ranks = average_ranks(values);
  r.source = std::string(to_string(scores.model));
  return r;
}

Theta theta_from_accuracy(double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw InvalidArgument("classification accuracy must lie in [0, 1], got " + format_double(accuracy));
  }
  return Theta{std::clamp(2.0 * (accuracy - 0.5), 0.0, 1.0), ThetaSource::Heuristic};
}

Theta manual_theta(double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw InvalidArgument("theta must lie in [0, 1], got " + format_double(value));
  return Theta{value, ThetaSource::Manual};
}

namespace {

std::vector<double> aligned_ranks(const Ranking& reference, const Ranking& other) {
  std::unordered_map<std::string, double> by_word;
  for (std::size_t i = 0; i < other.size(); ++i) by_word.emplace(other.words[i], other.ranks[i]);
  std::set<std::string> a(reference.words.begin(), reference.words.end());
  std::set<std::string> b(other.words.begin(), other.words.end());
  if (a != b || a.size() != reference.size() || b.size() != other.size()) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
    std::string msg = "rankings cover different words:";
    for (const auto& w : diff) msg += " " + w;
    if (diff.empty()) msg += " (duplicate words)";
    throw InvalidArgument(msg);
  }
  std::vector<double> out;
  out.reserve(reference.size());
  for (const auto& w : reference.words) out.push_back(by_word.at(w));
  return out;
}

}  // namespace

Ranking combine(const Ranking& r_cf, const Ranking& r_cd, const Theta& theta) {
  if (!(theta.value >= 0.0 && theta.value <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
  const auto cd = aligned_ranks(r_cf, r_cd);
  std::vector<double> mixed(r_cf.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = theta.value * cd[i] + (1.0 - theta.value) * r_cf.ranks[i];
  }
  Ranking out;
  out.words = r_cf.words;
  out.ranks = average_ranks(mixed);
  out.source = "circe";
  return out;
}

Theta grid_search_theta(const Ranking& r_cf, const Ranking& r_cd, const std::map<std::string, double>& gold,
                        double step) {
  if (!(step > 0.0 && step <= 0.5)) throw InvalidArgument("grid step must lie in (0, 0.5]");
  std::vector<double> grid;
  const auto k_max = static_cast<long>(std::floor(1.0 / step + 1e-9));
  for (long k = 0; k <= k_max; ++k) grid.push_back(std::min(1.0, static_cast<double>(k) * step));
  if (grid.back() < 1.0) grid.push_back(1.0);

  Theta best{0.0, ThetaSource::GridSearch};
  double best_rho = -2.0;
  for (double t : grid) {
    const auto mixed = combine(r_cf, r_cd, Theta{t, ThetaSource::GridSearch});
    // Opposed inputs can cancel into a constant ranking; rho is undefined there.
    if (std::adjacent_find(mixed.ranks.begin(), mixed.ranks.end(), std::not_equal_to<>()) == mixed.ranks.end()) {
      continue;
    }
    const double rho = spearman(mixed, gold);
    if (rho > best_rho) {
      best_rho = rho;
      best.value = t;
    }
  }
  return best;
}

std::map<std::string, bool> binarize(const Ranking& r) {
  if (r.size() == 0) throw InvalidArgument("cannot binarize an empty ranking");
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (r.ranks[a] != r.ranks[b]) return r.ranks[a] > r.ranks[b];
    return r.words[a] > r.words[b];
  });
  const std::size_t changed = (r.size() + 1) / 2;
  std::map<std::string, bool> out;
  for (std::size_t k = 0; k < order.size(); ++k) out[r.words[order[k]]] = k < changed;
  return out;
}

std::string format_graded_answer(const Ranking& r) {
  std::string out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    out += r.words[i];
    out += '\t';
    out += format_double(r.ranks[i]);
    out += '\n';
  }
  return out;
}

std::string format_binary_answer(const Ranking& r, const std::map<std::string, bool>& labels) {
  std::string out;
  for (const auto& w : r.words) {
    out += w;
    out += labels.at(w) ? "\t1\n" : "\t0\n";
  }
  return out;
}

}  // namespace lscd
