// Cosine kernel f(y_i, y_j) = exp(cos(y_i, y_j) / sigma) and its row-wise
// log-softmax, evaluated with log-sum-exp.
#pragma once

#include "clfefa/core.hpp"

namespace clfefa {

/// Norms below this are clamped before dividing.
inline constexpr double kNormGuard = 1e-12;

inline double guarded_norm(const Eigen::Ref<const Vector>& y) {
  return std::max(y.norm(), kNormGuard);
}

inline double kernel(const Eigen::Ref<const Vector>& yi, const Eigen::Ref<const Vector>& yj,
                     double sigma) {
  require(sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");
  const double cosine = yi.dot(yj) / (guarded_norm(yi) * guarded_norm(yj));
  return std::exp(cosine / sigma);
}

/// Column-normalized embedding plus the pairwise cosine matrix.
struct CosineTable {
  Matrix U;      // d x n, u_i = y_i / max(|y_i|, guard)
  Vector norms;  // guarded norms
  Matrix C;      // n x n, C_ij = u_i . u_j
};

inline CosineTable cosine_table(const Matrix& Y) {
  CosineTable t;
  const Index n = Y.cols();
  t.norms.resize(n);
  t.U.resize(Y.rows(), n);
  for (Index i = 0; i < n; ++i) {
    t.norms(i) = guarded_norm(Y.col(i));
    t.U.col(i) = Y.col(i) / t.norms(i);
  }
  t.C = t.U.transpose() * t.U;
  // exact symmetry, independent of the product's summation order
  t.C = (0.5 * (t.C + t.C.transpose())).eval();
  return t;
}

/// LS_ij = log( f_ij / sum_k f_ik ). The sum runs over every k, including
/// k = i, unless exclude_self is set, in which case LS_ii = -inf.
inline Matrix log_softmax(const Matrix& C, double sigma, bool exclude_self) {
  require(sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");
  const Index n = C.rows();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Matrix LS(n, n);
  for (Index i = 0; i < n; ++i) {
    double mx = neg_inf;
    for (Index k = 0; k < n; ++k) {
      if (exclude_self && k == i) continue;
      mx = std::max(mx, C(i, k) / sigma);
    }
    double acc = 0.0;
    for (Index k = 0; k < n; ++k) {
      if (exclude_self && k == i) continue;
      acc += std::exp(C(i, k) / sigma - mx);
    }
    const double lse = mx + std::log(acc);
    for (Index j = 0; j < n; ++j) LS(i, j) = C(i, j) / sigma - lse;
    if (exclude_self) LS(i, i) = neg_inf;
  }
  return LS;
}

}  // namespace clfefa
