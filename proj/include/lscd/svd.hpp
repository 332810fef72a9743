#pragma once

#include <Eigen/Dense>

namespace lscd {

struct SvdResult {
  Eigen::MatrixXd u;       // n x n, orthogonal
  Eigen::VectorXd sigma;   // descending
  Eigen::MatrixXd v;       // n x n, orthogonal
  int sweeps = 0;
};

struct JacobiOptions {
  double tolerance = 1e-12;
  int max_sweeps = 30;
};

/// One-sided (Hestenes) Jacobi SVD of a square matrix, a = u * diag(sigma) * v^T.
/// Columns of u belonging to zero singular values are completed to an
/// orthonormal basis. Throws NumericError if the sweep limit is reached.
SvdResult jacobi_svd(const Eigen::MatrixXd& a, const JacobiOptions& options = {});

}  // namespace lscd
