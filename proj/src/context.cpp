#include "lscd/context.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "lscd/error.hpp"
#include "lscd/rng.hpp"
#include "lscd/text.hpp"

namespace lscd {

void EncoderConfig::validate() const {
  if (dimension < 1) throw InvalidArgument("encoder dimension must be >= 1");
  if (context_radius < 0) throw InvalidArgument("encoder context_radius must be >= 0");
  if (epochs < 0) throw InvalidArgument("encoder epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("encoder learning rate must be positive");
}

TimeClassifier::TimeClassifier(std::vector<std::string> vocabulary, const EncoderConfig& cfg)
    : config(cfg), words_(std::move(vocabulary)) {
  cfg.validate();
  if (std::find(words_.begin(), words_.end(), kUnknown) == words_.end()) words_.emplace_back(kUnknown);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!ids_.emplace(words_[i], static_cast<int>(i)).second) {
      throw InvalidArgument("duplicate classifier vocabulary entry '" + words_[i] + "'");
    }
  }
  const int d = cfg.dimension;
  const int r = cfg.context_radius;
  Rng rng(derive_seed(cfg.seed, 100));
  embeddings.resize(static_cast<Eigen::Index>(words_.size()), d);
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    for (int j = 0; j < d; ++j) embeddings(i, j) = rng.uniform(-0.1, 0.1);
  }
  offset_weights.resize(2 * r + 1, d);
  for (int o = -r; o <= r; ++o) offset_weights.row(o + r).setConstant(o == 0 ? 1.0 : 0.5);
  bias = Vector::Zero(d);
  head_weights.resize(d);
  for (int j = 0; j < d; ++j) head_weights(j) = rng.uniform(-0.1, 0.1);
  head_bias = 0.0;
}

std::vector<int> TimeClassifier::encode(const Sentence& s) const {
  const int unk = ids_.at(std::string(kUnknown));
  std::vector<int> out;
  out.reserve(s.size());
  for (const auto& tok : s) {
    auto it = ids_.find(tok);
    out.push_back(it == ids_.end() ? unk : it->second);
  }
  return out;
}

Matrix TimeClassifier::contextualize(std::span<const int> ids) const {
  const auto n = static_cast<int>(ids.size());
  const int r = context_radius();
  Matrix h(n, dimension());
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd z = bias.transpose();
    for (int o = -r; o <= r; ++o) {
      const int j = i + o;
      if (j < 0 || j >= n) continue;
      z.array() += offset_weights.row(o + r).array() * embeddings.row(ids[static_cast<std::size_t>(j)]).array();
    }
    h.row(i) = z.array().tanh().matrix();
  }
  return h;
}

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// -[y log s(l) + (1-y) log(1 - s(l))]
double bce(double logit, double y) {
  return std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - y * logit;
}
}  // namespace

double TimeClassifier::predict_t2(std::span<const int> ids) const {
  if (ids.empty()) return sigmoid(head_bias);
  const Vector pooled = contextualize(ids).colwise().mean().transpose();
  return sigmoid(head_weights.dot(pooled) + head_bias);
}

double TimeClassifier::loss(std::span<const int> ids, double label) const {
  const Vector pooled = contextualize(ids).colwise().mean().transpose();
  return bce(head_weights.dot(pooled) + head_bias, label);
}

TimeClassifier::Gradient TimeClassifier::gradient(std::span<const int> ids, double label) const {
  const auto n = static_cast<int>(ids.size());
  if (n == 0) throw InvalidArgument("cannot compute a gradient for an empty sentence");
  const int r = context_radius();
  const int d = dimension();
  const Matrix h = contextualize(ids);
  const Vector pooled = h.colwise().mean().transpose();
  const double logit = head_weights.dot(pooled) + head_bias;

  Gradient g;
  g.loss = bce(logit, label);
  const double dlogit = sigmoid(logit) - label;
  g.head_weights = dlogit * pooled;
  g.head_bias = dlogit;
  // dL/dz_i = dL/dh_i * (1 - h_i^2), with dL/dh_i = dlogit * w / n
  const Eigen::RowVectorXd dh = (dlogit / n) * head_weights.transpose();
  Matrix dz(n, d);
  for (int i = 0; i < n; ++i) dz.row(i) = dh.array() * (1.0 - h.row(i).array().square());

  g.bias = dz.colwise().sum().transpose();
  g.offset_weights = Matrix::Zero(2 * r + 1, d);
  std::map<int, Vector> emb;
  for (int i = 0; i < n; ++i) {
    for (int o = -r; o <= r; ++o) {
      const int j = i + o;
      if (j < 0 || j >= n) continue;
      const int id = ids[static_cast<std::size_t>(j)];
      g.offset_weights.row(o + r).array() += dz.row(i).array() * embeddings.row(id).array();
      auto [it, inserted] = emb.try_emplace(id, Vector::Zero(d));
      it->second.array() += (dz.row(i).array() * offset_weights.row(o + r).array()).transpose();
    }
  }
  g.embeddings.assign(emb.begin(), emb.end());
  return g;
}

void TimeClassifier::apply(const Gradient& g, double lr) {
  for (const auto& [id, grad] : g.embeddings) embeddings.row(id) -= lr * grad.transpose();
  offset_weights -= lr * g.offset_weights;
  bias -= lr * g.bias;
  head_weights -= lr * g.head_weights;
  head_bias -= lr * g.head_bias;
}

bool TimeClassifier::all_finite() const {
  return embeddings.allFinite() && offset_weights.allFinite() && bias.allFinite() && head_weights.allFinite() &&
         std::isfinite(head_bias);
}

std::pair<TimeClassifier, ClfMetrics> train_time_classifier(const TimeClfDataset& dataset,
                                                            const EncoderConfig& config) {
  config.validate();
  std::vector<std::string> vocab;
  {
    std::unordered_map<std::string, int> seen;
    for (const auto& ex : dataset.examples) {
      for (const auto& tok : ex.tokens) {
        if (seen.emplace(tok, 0).second) vocab.push_back(tok);
      }
    }
  }
  TimeClassifier model(std::move(vocab), config);

  std::vector<std::pair<std::vector<int>, double>> train, test;
  for (const auto& ex : dataset.examples) {
    if (ex.tokens.empty()) continue;
    auto& dst = ex.split == Split::Train ? train : test;
    dst.emplace_back(model.encode(ex.tokens), ex.label == Period::T2 ? 1.0 : 0.0);
  }
  if (train.empty()) throw InvalidArgument("time classification train split is empty");
  if (test.empty()) throw InvalidArgument("time classification test split is empty");

  ClfMetrics m;
  m.train_examples = train.size();
  Rng rng(derive_seed(config.seed, 101));
  const std::size_t total_steps = train.size() * static_cast<std::size_t>(config.epochs);
  std::size_t step = 0;
  double loss_sum = 0.0;
  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (auto idx : order) {
      const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
      const double lr = config.learning_rate * std::max(config.min_learning_rate_fraction, 1.0 - progress);
      auto g = model.gradient(train[idx].first, train[idx].second);
      if (!std::isfinite(g.loss)) {
        throw NumericError("non-finite classification loss at step " + std::to_string(step + 1));
      }
      loss_sum += g.loss;
      model.apply(g, lr);
      ++step;
      if (step % 1024 == 0 && !model.all_finite()) {
        throw NumericError("time classifier parameters diverged at step " + std::to_string(step));
      }
    }
  }
  if (!model.all_finite()) throw NumericError("time classifier parameters diverged");
  m.mean_train_loss = step ? loss_sum / static_cast<double>(step) : 0.0;

  for (const auto& [ids, y] : test) {
    const bool predicted_t2 = model.predict_t2(ids) > 0.5;
    if (y > 0.5) {
      ++m.test_t2;
      m.correct_t2 += predicted_t2;
    } else {
      ++m.test_t1;
      m.correct_t1 += !predicted_t2;
    }
  }
  m.test_examples = test.size();
  m.accuracy = static_cast<double>(m.correct_t1 + m.correct_t2) / static_cast<double>(m.test_examples);
  m.accuracy_t1 = m.test_t1 ? static_cast<double>(m.correct_t1) / static_cast<double>(m.test_t1) : 0.0;
  m.accuracy_t2 = m.test_t2 ? static_cast<double>(m.correct_t2) / static_cast<double>(m.test_t2) : 0.0;
  return {std::move(model), m};
}

namespace {
void append_row(std::string& out, const auto& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    out += ' ';
    out += format_double(row(j));
  }
  out += '\n';
}

std::vector<double> parse_values(std::span<const std::string> fields, std::size_t ln) {
  std::vector<double> v;
  v.reserve(fields.size());
  for (const auto& f : fields) {
    try {
      v.push_back(parse_double(f));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), ln);
    }
  }
  return v;
}
}  // namespace

void save_classifier(const TimeClassifier& model, const std::string& path) {
  std::string out = "lscd-time-classifier 1\n";
  out += "shape " + std::to_string(model.vocab_size()) + " " + std::to_string(model.dimension()) + " " +
         std::to_string(model.context_radius()) + "\n";
  out += "head_bias " + format_double(model.head_bias) + "\n";
  out += "head_weights";
  append_row(out, model.head_weights);
  out += "bias";
  append_row(out, model.bias);
  for (Eigen::Index o = 0; o < model.offset_weights.rows(); ++o) {
    out += "offset";
    append_row(out, model.offset_weights.row(o));
  }
  for (std::size_t i = 0; i < model.vocab_size(); ++i) {
    out += model.words()[i];
    append_row(out, model.embeddings.row(static_cast<Eigen::Index>(i)));
  }
  write_file(path, out);
}

TimeClassifier load_classifier(const std::string& path) {
  const std::string text = read_file(path);
  auto lines = split_on(text, '\n');
  std::size_t ln = 0;
  auto next = [&]() -> std::vector<std::string> {
    while (ln < lines.size()) {
      auto f = split_ws(lines[ln++]);
      if (!f.empty()) return f;
    }
    throw FormatError("unexpected end of classifier file", ln);
  };
  auto magic = next();
  if (magic.size() != 2 || magic[0] != "lscd-time-classifier") throw FormatError("not a classifier file", ln);
  auto shape = next();
  if (shape.size() != 4 || shape[0] != "shape") throw FormatError("missing shape line", ln);
  const auto V = parse_int(shape[1]);
  const auto d = parse_int(shape[2]);
  const auto r = parse_int(shape[3]);
  if (V < 1 || d < 1 || r < 0) throw FormatError("invalid shape", ln);

  auto expect = [&](std::string_view key, std::int64_t count) {
    auto f = next();
    if (f[0] != key || static_cast<std::int64_t>(f.size()) != count + 1) {
      throw FormatError("expected '" + std::string(key) + "' with " + std::to_string(count) + " values", ln);
    }
    return parse_values(std::span(f).subspan(1), ln);
  };
  const double head_bias = expect("head_bias", 1)[0];
  auto hw = expect("head_weights", d);
  auto b = expect("bias", d);
  std::vector<std::vector<double>> offsets;
  for (std::int64_t o = 0; o < 2 * r + 1; ++o) offsets.push_back(expect("offset", d));

  std::vector<std::string> words;
  Matrix emb(V, d);
  for (std::int64_t i = 0; i < V; ++i) {
    auto f = next();
    if (static_cast<std::int64_t>(f.size()) != d + 1) throw FormatError("bad embedding row", ln);
    words.push_back(f[0]);
    auto v = parse_values(std::span(f).subspan(1), ln);
    for (std::int64_t j = 0; j < d; ++j) emb(i, j) = v[static_cast<std::size_t>(j)];
  }

  EncoderConfig cfg;
  cfg.dimension = static_cast<int>(d);
  cfg.context_radius = static_cast<int>(r);
  TimeClassifier model(std::move(words), cfg);
  if (static_cast<std::int64_t>(model.vocab_size()) != V) throw FormatError("classifier vocabulary lacks '<unk>'");
  model.embeddings = std::move(emb);
  model.head_bias = head_bias;
  model.head_weights = Eigen::Map<Vector>(hw.data(), d);
  model.bias = Eigen::Map<Vector>(b.data(), d);
  for (std::int64_t o = 0; o < 2 * r + 1; ++o) {
    model.offset_weights.row(o) = Eigen::Map<Eigen::RowVectorXd>(offsets[static_cast<std::size_t>(o)].data(), d);
  }
  return model;
}

Eigen::VectorXf pool_pieces(const Matrix& piece_vectors) {
  if (piece_vectors.rows() == 0) throw InvalidArgument("cannot pool zero pieces");
  return piece_vectors.colwise().mean().transpose().cast<float>();
}

std::vector<UseSet> extract_uses(const TimeClassifier& model, const Corpus& corpus, const TargetList& targets) {
  std::unordered_map<std::string, std::size_t> target_index;
  for (std::size_t i = 0; i < targets.size(); ++i) target_index.emplace(targets.words()[i], i);

  std::vector<std::vector<Eigen::VectorXf>> vecs(targets.size());
  std::vector<UseSet> out(targets.size());
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const auto& s = corpus.sentences[si];
    bool any = false;
    for (const auto& tok : s) any = any || target_index.count(tok);
    if (!any) continue;
    const auto ids = model.encode(s);
    const Matrix h = model.contextualize(ids);
    for (std::size_t p = 0; p < s.size(); ++p) {
      auto it = target_index.find(s[p]);
      if (it == target_index.end()) continue;
      // word-level encoder: exactly one piece per token
      vecs[it->second].push_back(pool_pieces(h.row(static_cast<Eigen::Index>(p))));
      out[it->second].sentence_indices.push_back(si);
    }
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    auto& u = out[t];
    u.word = targets.words()[t];
    u.period = corpus.period;
    u.vectors.resize(static_cast<Eigen::Index>(vecs[t].size()), model.dimension());
    for (std::size_t k = 0; k < vecs[t].size(); ++k) u.vectors.row(static_cast<Eigen::Index>(k)) = vecs[t][k].transpose();
  }
  return out;
}

std::string format_uses(std::span<const UseSet> uses) {
  std::string out;
  for (const auto& u : uses) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      out += u.word;
      out += '\t';
      out += to_string(u.period);
      out += '\t';
      out += std::to_string(u.sentence_indices.at(k));
      out += '\t';
      for (int j = 0; j < u.dimension(); ++j) {
        if (j) out += ' ';
        out += format_float9(u.vectors(static_cast<Eigen::Index>(k), j));
      }
      out += '\n';
    }
  }
  return out;
}

void export_uses(std::span<const UseSet> uses, const std::string& path) { write_file(path, format_uses(uses)); }

std::vector<UseSet> parse_uses(std::string_view text) {
  struct Pending {
    std::string word;
    Period period;
    std::vector<std::vector<float>> rows;
    std::vector<std::size_t> sentences;
  };
  std::vector<Pending> groups;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::size_t dim = 0;
  std::size_t ln = 0;
  for (auto line : split_on(text, '\n')) {
    ++ln;
    if (trim(line).empty()) continue;
    auto f = split_on(line, '\t');
    if (f.size() != 4) throw FormatError("expected 4 tab-separated columns", ln);
    Period period;
    std::int64_t sentence;
    std::vector<float> row;
    try {
      period = parse_period(f[1]);
      sentence = parse_int(f[2]);
      for (const auto& tok : split_ws(f[3])) row.push_back(parse_float(tok));
    } catch (const Error& e) {
      throw FormatError(e.what(), ln);
    }
    if (sentence < 0) throw FormatError("negative sentence index", ln);
    if (row.empty()) throw FormatError("empty vector", ln);
    if (dim == 0) dim = row.size();
    if (row.size() != dim) {
      throw FormatError("vector has " + std::to_string(row.size()) + " dimensions, expected " + std::to_string(dim),
                        ln);
    }
    auto key = std::make_pair(std::string(f[0]), period == Period::T1 ? 1 : 2);
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({key.first, period, {}, {}});
    groups[it->second].rows.push_back(std::move(row));
    groups[it->second].sentences.push_back(static_cast<std::size_t>(sentence));
  }
  std::vector<UseSet> out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    UseSet u;
    u.word = g.word;
    u.period = g.period;
    u.sentence_indices = std::move(g.sentences);
    u.vectors.resize(static_cast<Eigen::Index>(g.rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < g.rows.size(); ++k) {
      for (std::size_t j = 0; j < dim; ++j) u.vectors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = g.rows[k][j];
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<UseSet> import_uses(const std::string& path) { return parse_uses(read_file(path)); }

}  // namespace lscd
