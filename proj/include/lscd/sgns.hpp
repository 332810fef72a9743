#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lscd/corpus.hpp"

namespace lscd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SgnsConfig {
  int dimension = 300;
  int window = 10;
  int negatives = 1;
  int epochs = 5;
  double initial_learning_rate = 0.025;
  // Linear decay stops at initial_learning_rate * min_learning_rate_fraction.
  double min_learning_rate_fraction = 1e-4;
  double noise_exponent = 0.75;
  std::optional<double> subsample_threshold;
  std::uint64_t seed = 1;
  // Values above 1 train lock-free from several threads; results are then
  // not reproducible.
  int workers = 1;

  void validate() const;
};

/// Word vectors for one corpus. Rows of `input` are the word vectors used
/// downstream; `output` holds the context vectors.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(std::vector<std::string> words, Matrix input, Matrix output = {});

  std::size_t size() const { return words_.size(); }
  int dimension() const { return static_cast<int>(input.cols()); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> id(const std::string& w) const;
  bool contains(const std::string& w) const { return ids_.count(w) != 0; }

  Matrix input;
  Matrix output;
  SgnsConfig config;
  std::vector<std::uint64_t> counts;
  /// Mean SGNS loss per (center, context) pair, one entry per epoch.
  std::vector<double> epoch_losses;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Trains skip-gram with negative sampling on one corpus.
/// Throws EmptyCorpusError for an empty corpus and NumericError when a
/// non-finite value appears (the message names the step).
EmbeddingSpace train_sgns(const Corpus& corpus, const SgnsConfig& config);

/// Top-k words by cosine similarity of input vectors, excluding `word`.
std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingSpace& space,
                                                              const std::string& word, std::size_t k);

/// Word2vec text format: "<n> <d>" header, then "word v1 ... vd" per line.
void save_embeddings(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_embeddings(const std::string& path);

namespace sgns {

/// Negative log-likelihood of one positive pair and its negatives:
///   -log s(u_ctx . v) - sum_k log s(-u_k . v)
double pair_loss(const Vector& center, const Vector& context, std::span<const Vector> negatives);

struct PairGradient {
  Vector center;
  Vector context;
  std::vector<Vector> negatives;
  double loss = 0.0;
};

/// Analytic gradient of pair_loss with respect to every vector involved.
PairGradient pair_gradient(const Vector& center, const Vector& context, std::span<const Vector> negatives);

/// One logistic SGD update used by training. `label` is 1 for the observed
/// context and 0 for a noise word. Updates `output_row` in place, adds the
/// center's step to `center_step`, and returns the pair's loss term.
double logistic_update(Eigen::Ref<Eigen::RowVectorXd> output_row, const Eigen::Ref<const Eigen::RowVectorXd>& center,
                       double label, double learning_rate, Eigen::Ref<Eigen::RowVectorXd> center_step);

/// Inverse-CDF sampler over counts^exponent.
class NoiseDistribution {
 public:
  NoiseDistribution(std::span<const std::uint64_t> counts, double exponent);
  std::size_t sample(double u) const;
  double probability(std::size_t id) const;

 private:
  std::vector<double> cumulative_;
};

}  // namespace sgns

}  // namespace lscd
