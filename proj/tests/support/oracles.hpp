// Independent reference computations for the test suites. Nothing here
// calls into the library's numeric code paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Rank by counting: #strictly smaller + (#equal + 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

/// Tie-corrected closed form:
///   rho = (Sx + Sy - sum d^2) / (2 sqrt(Sx Sy)),
///   Sx = (n^3 - n)/12 - sum_groups (t^3 - t)/12.
inline double spearman_tie_corrected(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  auto rx = counting_ranks(x), ry = counting_ranks(y);
  auto tie_term = [](const std::vector<double>& v) {
    std::map<double, double> groups;
    for (double a : v) groups[a] += 1;
    double t = 0;
    for (auto& [val, c] : groups) t += (c * c * c - c) / 12.0;
    return t;
  };
  const double base = (n * n * n - n) / 12.0;
  const double sx = base - tie_term(x);
  const double sy = base - tie_term(y);
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return (sx + sy - d2) / (2.0 * std::sqrt(sx * sy));
}

/// Double sum over all pairs, divided by the pair count.
inline double mpe_brute_force(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double s = 0;
  for (const auto& x : a) {
    for (const auto& y : b) {
      double d = 0;
      for (std::size_t k = 0; k < x.size(); ++k) d += (x[k] - y[k]) * (x[k] - y[k]);
      s += std::sqrt(d);
    }
  }
  return s / static_cast<double>(a.size() * b.size());
}

/// Seeded random orthogonal matrix: Q factor of a Gaussian matrix, signs fixed.
inline Eigen::MatrixXd random_orthogonal(int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = nd(gen);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) *= -1;
  return q;
}

/// Central finite-difference gradient of f at x.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                          double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x(i);
    x(i) = orig + h;
    const double fp = f(x);
    x(i) = orig - h;
    const double fm = f(x);
    x(i) = orig;
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / denom;
}

}  // namespace oracle
