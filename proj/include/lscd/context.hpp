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
#include "lscd/sgns.hpp"

namespace lscd {

struct EncoderConfig {
  int dimension = 128;
  int context_radius = 5;
  int epochs = 1;
  double learning_rate = 0.05;
  double min_learning_rate_fraction = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ClfMetrics {
  double accuracy = 0.0;
  double accuracy_t1 = 0.0;
  double accuracy_t2 = 0.0;
  std::size_t test_examples = 0;
  std::size_t test_t1 = 0;
  std::size_t test_t2 = 0;
  std::size_t correct_t1 = 0;
  std::size_t correct_t2 = 0;
  std::size_t train_examples = 0;
  double mean_train_loss = 0.0;
};

/// Sentence time classifier. Each token's contextual vector is
///   h_i = tanh(b + sum_{o=-r..r} a_o * e(x_{i+o}))
/// (elementwise weights a_o, positions outside the sentence skipped); the
/// sentence is the mean of its h_i, scored by a logistic head giving P(T2).
class TimeClassifier {
 public:
  TimeClassifier() = default;
  /// Randomly initialized model over `vocabulary` (an unknown-word slot is added).
  TimeClassifier(std::vector<std::string> vocabulary, const EncoderConfig& config);

  static constexpr std::string_view kUnknown = "<unk>";

  std::size_t vocab_size() const { return words_.size(); }
  int dimension() const { return static_cast<int>(embeddings.cols()); }
  int context_radius() const { return (static_cast<int>(offset_weights.rows()) - 1) / 2; }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<int> encode(const Sentence& s) const;

  /// Row i is token i's contextual vector.
  Matrix contextualize(std::span<const int> ids) const;
  double predict_t2(std::span<const int> ids) const;

  /// Binary cross-entropy against label (1 = T2).
  double loss(std::span<const int> ids, double label) const;

  struct Gradient {
    std::vector<std::pair<int, Vector>> embeddings;  // per distinct id
    Matrix offset_weights;
    Vector bias;
    Vector head_weights;
    double head_bias = 0.0;
    double loss = 0.0;
  };
  Gradient gradient(std::span<const int> ids, double label) const;
  void apply(const Gradient& g, double learning_rate);

  bool all_finite() const;

  Matrix embeddings;      // |V| x d
  Matrix offset_weights;  // (2r+1) x d; row r is the self weight
  Vector bias;
  Vector head_weights;
  double head_bias = 0.0;
  EncoderConfig config;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

/// Trains on the train split for config.epochs passes, then evaluates on the
/// held-out split. Throws InvalidArgument for an empty split and
/// NumericError on a non-finite loss.
std::pair<TimeClassifier, ClfMetrics> train_time_classifier(const TimeClfDataset& dataset,
                                                            const EncoderConfig& config);

void save_classifier(const TimeClassifier& model, const std::string& path);
TimeClassifier load_classifier(const std::string& path);

/// Contextual vectors of every occurrence of one word in one period.
struct UseSet {
  std::string word;
  Period period = Period::T1;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vectors;
  std::vector<std::size_t> sentence_indices;

  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
  bool empty() const { return vectors.rows() == 0; }
  int dimension() const { return static_cast<int>(vectors.cols()); }
};

/// One UseSet per target in target order; absent targets yield an empty set.
std::vector<UseSet> extract_uses(const TimeClassifier& model, const Corpus& corpus, const TargetList& targets);

/// Mean of several piece vectors, for tokenizers that split one word.
Eigen::VectorXf pool_pieces(const Matrix& piece_vectors);

/// TSV: word, period (t1|t2), sentence_index, space-separated vector.
void export_uses(std::span<const UseSet> uses, const std::string& path);
std::string format_uses(std::span<const UseSet> uses);
/// Groups rows by (word, period) in first-seen order. Throws FormatError
/// naming the line on ragged dimensions or malformed rows.
std::vector<UseSet> import_uses(const std::string& path);
std::vector<UseSet> parse_uses(std::string_view text);

}  // namespace lscd
