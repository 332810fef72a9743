#include "lscd/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "lscd/error.hpp"
#include "lscd/rng.hpp"
#include "lscd/text.hpp"

namespace lscd {

void SgnsConfig::validate() const {
  if (dimension < 1) throw InvalidArgument("sgns dimension must be >= 1");
  if (window < 1) throw InvalidArgument("sgns window must be >= 1");
  if (negatives < 1) throw InvalidArgument("sgns negatives must be >= 1");
  if (epochs < 0) throw InvalidArgument("sgns epochs must be >= 0");
  if (!(initial_learning_rate > 0.0)) throw InvalidArgument("sgns learning rate must be positive");
  if (min_learning_rate_fraction < 0.0 || min_learning_rate_fraction > 1.0) {
    throw InvalidArgument("sgns min_learning_rate_fraction must lie in [0, 1]");
  }
  if (subsample_threshold && !(*subsample_threshold > 0.0)) {
    throw InvalidArgument("sgns subsample threshold must be positive");
  }
  if (workers < 1) throw InvalidArgument("sgns workers must be >= 1");
}

EmbeddingSpace::EmbeddingSpace(std::vector<std::string> words, Matrix in, Matrix out)
    : input(std::move(in)), output(std::move(out)), words_(std::move(words)) {
  if (static_cast<std::size_t>(input.rows()) != words_.size()) {
    throw InvalidArgument("embedding row count does not match vocabulary size");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!ids_.emplace(words_[i], i).second) throw InvalidArgument("duplicate word '" + words_[i] + "'");
  }
}

std::optional<std::size_t> EmbeddingSpace::id(const std::string& w) const {
  auto it = ids_.find(w);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

namespace sgns {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// log(sigmoid(x)) without overflow
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
}  // namespace

double pair_loss(const Vector& center, const Vector& context, std::span<const Vector> negatives) {
  double loss = -log_sigmoid(context.dot(center));
  for (const auto& u : negatives) loss -= log_sigmoid(-u.dot(center));
  return loss;
}

PairGradient pair_gradient(const Vector& center, const Vector& context, std::span<const Vector> negatives) {
  PairGradient g;
  const double f = context.dot(center);
  // d/df of -log s(f) is s(f) - 1
  const double gp = sigmoid(f) - 1.0;
  g.center = gp * context;
  g.context = gp * center;
  g.loss = -log_sigmoid(f);
  g.negatives.reserve(negatives.size());
  for (const auto& u : negatives) {
    const double fn = u.dot(center);
    // d/df of -log s(-f) is s(f)
    const double gn = sigmoid(fn);
    g.center += gn * u;
    g.negatives.push_back(gn * center);
    g.loss -= log_sigmoid(-fn);
  }
  return g;
}

double logistic_update(Eigen::Ref<Eigen::RowVectorXd> output_row, const Eigen::Ref<const Eigen::RowVectorXd>& center,
                       double label, double learning_rate, Eigen::Ref<Eigen::RowVectorXd> center_step) {
  const double f = output_row.dot(center);
  if (!std::isfinite(f)) return f;
  const double g = (label - sigmoid(f)) * learning_rate;
  center_step.noalias() += g * output_row;
  output_row.noalias() += g * center;
  return label > 0.5 ? -log_sigmoid(f) : -log_sigmoid(-f);
}

NoiseDistribution::NoiseDistribution(std::span<const std::uint64_t> counts, double exponent) {
  cumulative_.reserve(counts.size());
  double total = 0.0;
  for (auto c : counts) {
    total += std::pow(static_cast<double>(c), exponent);
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw InvalidArgument("noise distribution needs a positive count");
}

std::size_t NoiseDistribution::sample(double u) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u * cumulative_.back());
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

double NoiseDistribution::probability(std::size_t id) const {
  const double prev = id == 0 ? 0.0 : cumulative_[id - 1];
  return (cumulative_[id] - prev) / cumulative_.back();
}

}  // namespace sgns

namespace {

struct Trainer {
  const SgnsConfig& cfg;
  const std::vector<std::vector<std::uint32_t>>& sentences;
  const std::vector<double>& keep_prob;  // empty: no subsampling
  const sgns::NoiseDistribution& noise;
  Matrix& input;
  Matrix& output;
  std::uint64_t total_steps;  // tokens * epochs, for learning-rate decay
  std::atomic<std::uint64_t> processed{0};

  double learning_rate() const {
    const double progress = static_cast<double>(processed.load(std::memory_order_relaxed)) /
                            static_cast<double>(std::max<std::uint64_t>(total_steps, 1));
    return cfg.initial_learning_rate * std::max(cfg.min_learning_rate_fraction, 1.0 - progress);
  }

  struct ShardResult {
    double loss = 0.0;
    std::uint64_t pairs = 0;
  };

  ShardResult run_shard(std::size_t begin, std::size_t end, Rng& rng, int epoch) {
    ShardResult r;
    Eigen::RowVectorXd grad(cfg.dimension);
    std::vector<std::uint32_t> kept;
    for (std::size_t si = begin; si < end; ++si) {
      const auto& sent = sentences[si];
      kept.clear();
      for (auto w : sent) {
        if (keep_prob.empty() || rng.uniform01() < keep_prob[w]) kept.push_back(w);
      }
      const double lr = learning_rate();
      const int n = static_cast<int>(kept.size());
      for (int i = 0; i < n; ++i) {
        const int b = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(cfg.window)));
        const auto center = kept[i];
        auto v = input.row(center);
        for (int j = std::max(0, i - b); j <= std::min(n - 1, i + b); ++j) {
          if (j == i) continue;
          const auto ctx = kept[j];
          grad.setZero();
          double loss = sgns::logistic_update(output.row(ctx), v, 1.0, lr, grad);
          for (int k = 0; k < cfg.negatives; ++k) {
            const auto neg = static_cast<std::uint32_t>(noise.sample(rng.uniform01()));
            if (neg == ctx) continue;
            loss += sgns::logistic_update(output.row(neg), v, 0.0, lr, grad);
          }
          if (!std::isfinite(loss)) {
            throw NumericError("non-finite loss in sgns training (epoch " + std::to_string(epoch + 1) +
                               ", sentence " + std::to_string(si) + ", position " + std::to_string(i) + ")");
          }
          v.noalias() += grad;
          r.loss += loss;
          ++r.pairs;
        }
      }
      processed.fetch_add(sent.size(), std::memory_order_relaxed);
    }
    return r;
  }
};

}  // namespace

EmbeddingSpace train_sgns(const Corpus& corpus, const SgnsConfig& config) {
  config.validate();
  if (corpus.sentences.empty()) throw EmptyCorpusError("cannot train embeddings on an empty corpus");

  std::vector<std::string> words;
  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::uint64_t> counts;
  std::vector<std::vector<std::uint32_t>> sentences;
  sentences.reserve(corpus.sentences.size());
  std::uint64_t tokens = 0;
  for (const auto& s : corpus.sentences) {
    std::vector<std::uint32_t> enc;
    enc.reserve(s.size());
    for (const auto& tok : s) {
      auto [it, inserted] = ids.try_emplace(tok, static_cast<std::uint32_t>(words.size()));
      if (inserted) {
        words.push_back(tok);
        counts.push_back(0);
      }
      ++counts[it->second];
      enc.push_back(it->second);
    }
    tokens += enc.size();
    sentences.push_back(std::move(enc));
  }

  const int d = config.dimension;
  const auto V = static_cast<Eigen::Index>(words.size());
  Rng init_rng(derive_seed(config.seed, 0));
  Matrix input(V, d);
  for (Eigen::Index i = 0; i < V; ++i) {
    for (int j = 0; j < d; ++j) input(i, j) = init_rng.uniform(-0.5 / d, 0.5 / d);
  }
  Matrix output = Matrix::Zero(V, d);

  std::vector<double> keep_prob;
  if (config.subsample_threshold) {
    const double t = *config.subsample_threshold * static_cast<double>(tokens);
    keep_prob.resize(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      const double f = static_cast<double>(counts[i]);
      keep_prob[i] = std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
    }
  }

  sgns::NoiseDistribution noise(counts, config.noise_exponent);
  Trainer trainer{config, sentences, keep_prob, noise, input, output, tokens * static_cast<std::uint64_t>(config.epochs)};

  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    std::uint64_t pairs = 0;
    if (config.workers == 1) {
      Rng rng(derive_seed(config.seed, 1 + static_cast<std::uint64_t>(epoch)));
      auto r = trainer.run_shard(0, sentences.size(), rng, epoch);
      loss = r.loss;
      pairs = r.pairs;
    } else {
      // Lock-free updates to the shared matrices from every worker.
      const auto W = static_cast<std::size_t>(config.workers);
      std::vector<Trainer::ShardResult> results(W);
      std::vector<std::exception_ptr> errors(W);
      {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < W; ++w) {
          pool.emplace_back([&, w] {
            try {
              Rng rng(derive_seed(config.seed, 1 + static_cast<std::uint64_t>(epoch) * W + w));
              const std::size_t b = sentences.size() * w / W, e = sentences.size() * (w + 1) / W;
              results[w] = trainer.run_shard(b, e, rng, epoch);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      for (const auto& r : results) {
        loss += r.loss;
        pairs += r.pairs;
      }
    }
    epoch_losses.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }

  if (!input.allFinite() || !output.allFinite()) throw NumericError("sgns training produced non-finite vectors");

  EmbeddingSpace space(std::move(words), std::move(input), std::move(output));
  space.config = config;
  space.counts = std::move(counts);
  space.epoch_losses = std::move(epoch_losses);
  return space;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingSpace& space, const std::string& word,
                                                              std::size_t k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  auto q = space.id(word);
  if (!q) throw InvalidArgument("word '" + word + "' is not in the vocabulary");
  const Vector query = space.input.row(static_cast<Eigen::Index>(*q)).transpose();
  const double qn = query.norm();
  std::vector<std::pair<std::string, double>> sims;
  sims.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (i == *q) continue;
    const auto row = space.input.row(static_cast<Eigen::Index>(i));
    const double denom = qn * row.norm();
    sims.emplace_back(space.words()[i], denom > 0.0 ? row.dot(query) / denom : 0.0);
  }
  k = std::min(k, sims.size());
  std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                    [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  sims.resize(k);
  return sims;
}

void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
  std::string out = std::to_string(space.size()) + " " + std::to_string(space.dimension()) + "\n";
  for (std::size_t i = 0; i < space.size(); ++i) {
    out += space.words()[i];
    for (int j = 0; j < space.dimension(); ++j) {
      out += ' ';
      out += format_double(space.input(static_cast<Eigen::Index>(i), j));
    }
    out += '\n';
  }
  write_file(path, out);
}

EmbeddingSpace load_embeddings(const std::string& path) {
  const std::string text = read_file(path);
  auto lines = split_on(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw FormatError("missing header in '" + path + "'", 1);
  auto header = split_ws(lines[0]);
  if (header.size() != 2) throw FormatError("header must be '<vocab_size> <dimension>'", 1);
  const auto n = parse_int(header[0]);
  const auto d = parse_int(header[1]);
  if (n < 0 || d < 1) throw FormatError("invalid header values", 1);
  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(n));
  Matrix m(n, d);
  std::size_t row = 0;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    auto f = split_ws(lines[ln]);
    if (static_cast<std::int64_t>(f.size()) != d + 1) {
      throw FormatError("expected word and " + std::to_string(d) + " values", ln + 1);
    }
    if (static_cast<std::int64_t>(row) >= n) throw FormatError("more rows than the header declares", ln + 1);
    words.push_back(f[0]);
    for (std::int64_t j = 0; j < d; ++j) {
      try {
        m(static_cast<Eigen::Index>(row), j) = parse_double(f[static_cast<std::size_t>(j) + 1]);
      } catch (const FormatError& e) {
        throw FormatError(e.what(), ln + 1);
      }
    }
    ++row;
  }
  if (static_cast<std::int64_t>(row) != n) throw FormatError("fewer rows than the header declares");
  return EmbeddingSpace(std::move(words), std::move(m));
}

}  // namespace lscd
