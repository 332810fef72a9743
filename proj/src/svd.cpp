#include "lscd/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lscd/error.hpp"

namespace lscd {

SvdResult jacobi_svd(const Eigen::MatrixXd& a, const JacobiOptions& options) {
  if (a.rows() != a.cols()) throw InvalidArgument("jacobi_svd expects a square matrix");
  if (!a.allFinite()) throw NumericError("jacobi_svd input contains non-finite values");
  const Eigen::Index n = a.cols();

  Eigen::MatrixXd w = a;  // column-major: columns are contiguous
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  int sweep = 0;
  bool converged = n < 2;
  while (!converged) {
    if (sweep == options.max_sweeps) {
      throw NumericError("jacobi_svd did not converge after " + std::to_string(sweep) + " sweeps");
    }
    ++sweep;
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (auto* m : {&w, &v}) {
          auto cp = m->col(p);
          auto cq = m->col(q);
          for (Eigen::Index i = 0; i < n; ++i) {
            const double xp = cp(i), xq = cq(i);
            cp(i) = c * xp - s * xq;
            cq(i) = s * xp + c * xq;
          }
        }
      }
    }
    converged = !rotated;
  }

  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  SvdResult r;
  r.sweeps = sweep;
  r.sigma.resize(n);
  r.u = Eigen::MatrixXd::Zero(n, n);
  r.v.resize(n, n);
  const double smax = n ? norms(order[0]) : 0.0;
  const double cutoff = smax * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto j = order[static_cast<std::size_t>(k)];
    r.sigma(k) = norms(j);
    r.v.col(k) = v.col(j);
    if (norms(j) > cutoff) {
      r.u.col(k) = w.col(j) / norms(j);
      rank = k + 1;
    }
  }

  // Complete u for (numerically) zero singular values with Gram-Schmidt
  // over the canonical basis.
  Eigen::Index next_basis = 0;
  for (Eigen::Index k = rank; k < n; ++k) {
    for (; next_basis < n; ++next_basis) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(n, next_basis);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < k; ++i) e -= r.u.col(i).dot(e) * r.u.col(i);
      }
      const double en = e.norm();
      if (en > 1e-8) {
        r.u.col(k) = e / en;
        ++next_basis;
        break;
      }
    }
  }
  return r;
}

}  // namespace lscd
