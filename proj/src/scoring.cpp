#include "lscd/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "lscd/error.hpp"
#include "lscd/rng.hpp"
#include "lscd/text.hpp"

namespace lscd {

std::string_view to_string(ModelTag m) {
  switch (m) {
    case ModelTag::ContextFree:
      return "context_free";
    case ModelTag::ContextDependent:
      return "context_dependent";
    case ModelTag::Circe:
      return "circe";
  }
  return "unknown";
}

ModelTag parse_model_tag(std::string_view s) {
  if (s == "context_free") return ModelTag::ContextFree;
  if (s == "context_dependent") return ModelTag::ContextDependent;
  if (s == "circe") return ModelTag::Circe;
  throw InvalidArgument("unknown model tag '" + std::string(s) + "'");
}

std::vector<std::string> ChangeScores::words() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.word);
  return out;
}

std::size_t ChangeScores::unscorable_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const ScoreEntry& e) { return !e.score; }));
}

ChangeScores static_score(const AlignedPair& aligned, const TargetList& targets) {
  ChangeScores out;
  out.model = ModelTag::ContextFree;
  for (const auto& w : targets.words()) {
    auto i1 = aligned.space_t1.id(w);
    auto i2 = aligned.space_t2.id(w);
    ScoreEntry e{w, std::nullopt, "ok"};
    if (!i1 && !i2) {
      e.status = "missing in t1 and t2";
    } else if (!i1) {
      e.status = "missing in t1";
    } else if (!i2) {
      e.status = "missing in t2";
    } else {
      const Eigen::RowVectorXd mapped =
          aligned.space_t1.input.row(static_cast<Eigen::Index>(*i1)) * aligned.rotation;
      e.score = (mapped - aligned.space_t2.input.row(static_cast<Eigen::Index>(*i2))).norm();
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

namespace {
double pair_distance(const UseSet& a, std::size_t i, const UseSet& b, std::size_t j) {
  double s = 0.0;
  const int d = a.dimension();
  for (int k = 0; k < d; ++k) {
    const double diff = static_cast<double>(a.vectors(static_cast<Eigen::Index>(i), k)) -
                        static_cast<double>(b.vectors(static_cast<Eigen::Index>(j), k));
    s += diff * diff;
  }
  return std::sqrt(s);
}

// Canonical argument order so that d(A, B) and d(B, A) sum the same terms in
// the same sequence.
bool precedes(const UseSet& a, const UseSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  const auto n = static_cast<std::ptrdiff_t>(a.vectors.size());
  return std::lexicographical_compare(a.vectors.data(), a.vectors.data() + n, b.vectors.data(),
                                      b.vectors.data() + n);
}
}  // namespace

double mpe_distance(const UseSet& first, const UseSet& second, const PairBudget& budget) {
  if (first.empty() || second.empty()) throw InvalidArgument("mpe_distance needs two non-empty use sets");
  if (first.dimension() != second.dimension()) throw InvalidArgument("mpe_distance: use sets differ in dimension");
  const bool swap = precedes(second, first);
  const UseSet& a = swap ? second : first;
  const UseSet& b = swap ? first : second;
  const std::uint64_t pairs = static_cast<std::uint64_t>(a.size()) * b.size();
  double sum = 0.0;
  if (budget.max_pairs == 0 || budget.max_pairs >= pairs) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) sum += pair_distance(a, i, b, j);
    }
    return sum / static_cast<double>(pairs);
  }
  Rng rng(budget.seed);
  for (std::uint64_t k = 0; k < budget.max_pairs; ++k) {
    const auto i = static_cast<std::size_t>(rng.index(a.size()));
    const auto j = static_cast<std::size_t>(rng.index(b.size()));
    sum += pair_distance(a, i, b, j);
  }
  return sum / static_cast<double>(budget.max_pairs);
}

ChangeScores contextual_score(std::span<const UseSet> uses_t1, std::span<const UseSet> uses_t2,
                              const TargetList& targets, const PairBudget& budget) {
  auto index = [](std::span<const UseSet> uses) {
    std::unordered_map<std::string, const UseSet*> m;
    for (const auto& u : uses) m.emplace(u.word, &u);
    return m;
  };
  const auto m1 = index(uses_t1);
  const auto m2 = index(uses_t2);
  ChangeScores out;
  out.model = ModelTag::ContextDependent;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& w = targets.words()[t];
    auto i1 = m1.find(w);
    auto i2 = m2.find(w);
    const bool has1 = i1 != m1.end() && !i1->second->empty();
    const bool has2 = i2 != m2.end() && !i2->second->empty();
    ScoreEntry e{w, std::nullopt, "ok"};
    if (!has1 && !has2) {
      e.status = "no t1 or t2 uses";
    } else if (!has1) {
      e.status = "no t1 uses";
    } else if (!has2) {
      e.status = "no t2 uses";
    } else {
      PairBudget b = budget;
      b.seed = derive_seed(budget.seed, t);
      e.score = mpe_distance(*i1->second, *i2->second, b);
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

std::string format_scores_tsv(std::span<const ChangeScores> scores) {
  std::string out = "model\tword\tscore\tstatus\n";
  for (const auto& s : scores) {
    for (const auto& e : s.entries) {
      out += to_string(s.model);
      out += '\t';
      out += e.word;
      out += '\t';
      out += e.score ? format_double(*e.score) : "NA";
      out += '\t';
      out += e.status;
      out += '\n';
    }
  }
  return out;
}

void save_scores_tsv(std::span<const ChangeScores> scores, const std::string& path) {
  write_file(path, format_scores_tsv(scores));
}

std::vector<ChangeScores> load_scores_tsv(const std::string& path) {
  std::vector<ChangeScores> out;
  std::size_t ln = 0;
  const std::string text = read_file(path);
  for (auto line : split_on(text, '\n')) {
    ++ln;
    if (trim(line).empty()) continue;
    if (ln == 1 && line.rfind("model\t", 0) == 0) continue;
    auto f = split_on(line, '\t');
    if (f.size() != 4) throw FormatError("expected 4 tab-separated columns", ln);
    const auto tag = parse_model_tag(f[0]);
    auto it = std::find_if(out.begin(), out.end(), [tag](const ChangeScores& c) { return c.model == tag; });
    if (it == out.end()) {
      out.push_back(ChangeScores{tag, {}});
      it = out.end() - 1;
    }
    ScoreEntry e{std::string(f[1]), std::nullopt, std::string(f[3])};
    if (f[2] != "NA") {
      try {
        e.score = parse_double(f[2]);
      } catch (const FormatError& err) {
        throw FormatError(err.what(), ln);
      }
    }
    it->entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace lscd
