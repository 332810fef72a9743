#pragma once

#include <string>
#include <vector>

#include "lscd/sgns.hpp"

namespace lscd {

/// Scales every row to unit L2 norm. Zero rows are left as zero and their
/// words appended to `zero_rows`; a zero row for a word in `required` throws
/// InvalidArgument naming the word.
EmbeddingSpace length_normalize(const EmbeddingSpace& space, const std::vector<std::string>& required = {},
                                std::vector<std::string>* zero_rows = nullptr);

/// Subtracts the column means of the input matrix.
EmbeddingSpace mean_center(const EmbeddingSpace& space);

/// Words present in both spaces, in t1 order.
std::vector<std::string> shared_vocabulary(const EmbeddingSpace& a, const EmbeddingSpace& b);

struct AlignedPair {
  EmbeddingSpace space_t1;
  EmbeddingSpace space_t2;
  /// Orthogonal d x d map taking t1 rows into t2 space (row vector times rotation).
  Eigen::MatrixXd rotation;
  std::vector<std::string> shared_vocabulary;
  int svd_sweeps = 0;
};

/// Orthogonal Procrustes fit over the shared vocabulary: rotation = U V^T
/// where U S V^T is the SVD of A^T B. Inputs are used as given.
/// Throws InvalidArgument when fewer than d words are shared.
AlignedPair procrustes(const EmbeddingSpace& space_t1, const EmbeddingSpace& space_t2);

/// Same fit on raw row-aligned matrices.
Eigen::MatrixXd procrustes_rotation(const Matrix& a, const Matrix& b, int* sweeps = nullptr);

struct AlignConfig {
  bool normalize = true;
  bool center = true;
  bool renormalize = false;
};

/// normalize -> center -> (renormalize) on both spaces, then procrustes.
AlignedPair align_spaces(const EmbeddingSpace& t1, const EmbeddingSpace& t2, const AlignConfig& config = {});

/// Rotation as tab-separated rows.
void save_rotation_tsv(const Eigen::MatrixXd& rotation, const std::string& path);
Eigen::MatrixXd load_rotation_tsv(const std::string& path);

}  // namespace lscd
