#include "lscd/align.hpp"

#include <unordered_set>

#include "lscd/error.hpp"
#include "lscd/svd.hpp"
#include "lscd/text.hpp"

namespace lscd {

namespace {
EmbeddingSpace with_input(const EmbeddingSpace& src, Matrix input) {
  EmbeddingSpace out(src.words(), std::move(input), src.output);
  out.config = src.config;
  out.counts = src.counts;
  out.epoch_losses = src.epoch_losses;
  return out;
}
}  // namespace

EmbeddingSpace length_normalize(const EmbeddingSpace& space, const std::vector<std::string>& required,
                                std::vector<std::string>* zero_rows) {
  std::unordered_set<std::string> req(required.begin(), required.end());
  Matrix m = space.input;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) {
      m.row(i) /= n;
      continue;
    }
    const auto& w = space.words()[static_cast<std::size_t>(i)];
    if (req.count(w)) throw InvalidArgument("zero-norm vector for shared word '" + w + "'");
    if (zero_rows) zero_rows->push_back(w);
  }
  return with_input(space, std::move(m));
}

EmbeddingSpace mean_center(const EmbeddingSpace& space) {
  if (space.size() == 0) throw InvalidArgument("cannot center an empty embedding space");
  Matrix m = space.input;
  const Eigen::RowVectorXd mean = m.colwise().mean();
  m.rowwise() -= mean;
  return with_input(space, std::move(m));
}

std::vector<std::string> shared_vocabulary(const EmbeddingSpace& a, const EmbeddingSpace& b) {
  std::vector<std::string> out;
  for (const auto& w : a.words()) {
    if (b.contains(w)) out.push_back(w);
  }
  return out;
}

Eigen::MatrixXd procrustes_rotation(const Matrix& a, const Matrix& b, int* sweeps) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("procrustes: shape mismatch");
  if (a.rows() < a.cols()) {
    throw InvalidArgument("procrustes is under-determined: " + std::to_string(a.rows()) + " rows for dimension " +
                          std::to_string(a.cols()));
  }
  const Eigen::MatrixXd m = a.transpose() * b;
  auto svd = jacobi_svd(m);
  if (sweeps) *sweeps = svd.sweeps;
  return svd.u * svd.v.transpose();
}

AlignedPair procrustes(const EmbeddingSpace& space_t1, const EmbeddingSpace& space_t2) {
  if (space_t1.dimension() != space_t2.dimension()) {
    throw InvalidArgument("procrustes: spaces have different dimensions");
  }
  AlignedPair out;
  out.shared_vocabulary = shared_vocabulary(space_t1, space_t2);
  const auto n = static_cast<Eigen::Index>(out.shared_vocabulary.size());
  const int d = space_t1.dimension();
  if (n < d) {
    throw InvalidArgument("procrustes is under-determined: " + std::to_string(n) + " shared words for dimension " +
                          std::to_string(d));
  }
  Matrix a(n, d), b(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = out.shared_vocabulary[static_cast<std::size_t>(i)];
    a.row(i) = space_t1.input.row(static_cast<Eigen::Index>(*space_t1.id(w)));
    b.row(i) = space_t2.input.row(static_cast<Eigen::Index>(*space_t2.id(w)));
  }
  out.rotation = procrustes_rotation(a, b, &out.svd_sweeps);
  out.space_t1 = space_t1;
  out.space_t2 = space_t2;
  return out;
}

AlignedPair align_spaces(const EmbeddingSpace& t1, const EmbeddingSpace& t2, const AlignConfig& config) {
  const auto shared = shared_vocabulary(t1, t2);
  auto prep = [&](const EmbeddingSpace& s) {
    EmbeddingSpace x = s;
    if (config.normalize) x = length_normalize(x, shared);
    if (config.center) x = mean_center(x);
    if (config.renormalize) x = length_normalize(x, shared);
    return x;
  };
  return procrustes(prep(t1), prep(t2));
}

void save_rotation_tsv(const Eigen::MatrixXd& rotation, const std::string& path) {
  std::string out;
  for (Eigen::Index i = 0; i < rotation.rows(); ++i) {
    for (Eigen::Index j = 0; j < rotation.cols(); ++j) {
      if (j) out += '\t';
      out += format_double(rotation(i, j));
    }
    out += '\n';
  }
  write_file(path, out);
}

Eigen::MatrixXd load_rotation_tsv(const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::size_t ln = 0;
  const std::string text = read_file(path);
  for (auto line : split_on(text, '\n')) {
    ++ln;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (auto f : split_on(line, '\t')) row.push_back(parse_double(f));
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("ragged rotation row", ln);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.size() != rows.front().size()) throw FormatError("rotation must be square");
  const auto d = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace lscd
