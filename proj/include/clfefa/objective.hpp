// Contrastive objective: InfoNCE-style loss weighted by W = H o S, the full
// alternating objective, its analytic gradient w.r.t. P, a central-difference
// oracle and the per-sample mutual-information bound diagnostic.
#pragma once

#include "clfefa/core.hpp"
#include "clfefa/graph.hpp"
#include "clfefa/kernel.hpp"
#include "clfefa/supervision.hpp"

namespace clfefa {

struct LossBreakdown {
  double contrastive = 0.0;       // sum_ij -W_ij log softmax_ij
  double frobenius = 0.0;         // sum_i gamma_i |S_i|^2
  double spectral = 0.0;          // 2 lambda Tr(F^T L_S F)
  double total = 0.0;
  double frobenius_global = 0.0;  // (mean gamma) |S|_F^2, diagnostic only
};

struct GradientReport {
  Matrix grad;                          // D x d
  std::optional<Matrix> fd_grad;        // central differences, when requested
  std::optional<double> max_rel_err;    // max |g - g_fd| / (|g_fd| + 1e-8)
};

namespace detail {

inline Matrix positive_weights(const IndicatorMatrix& ind, const Matrix& S, bool exclude_self) {
  require(ind.H.rows() == S.rows() && ind.H.cols() == S.cols(), ErrorKind::DimensionMismatch,
          "H and S differ in shape");
  Matrix W = ind.H.cwiseProduct(S);
  if (exclude_self) W.diagonal().setZero();
  return W;
}

inline Vector row_losses_from(const Matrix& W, const Matrix& LS) {
  const Index n = W.rows();
  Vector l = Vector::Zero(n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (W(i, j) != 0.0) l(i) -= W(i, j) * LS(i, j);
  return l;
}

}  // namespace detail

/// Per-sample contrastive loss l_i = sum_j -W_ij log softmax_ij.
inline Vector row_losses(const Embedding& emb, const IndicatorMatrix& ind, const Matrix& S,
                         double sigma, bool exclude_self = false) {
  require(emb.Y.cols() == S.rows(), ErrorKind::DimensionMismatch, "Y and S disagree on n");
  const Matrix W = detail::positive_weights(ind, S, exclude_self);
  const CosineTable cos = cosine_table(emb.Y);
  const Matrix LS = log_softmax(cos.C, sigma, exclude_self);
  Vector l = detail::row_losses_from(W, LS);
  if (!l.allFinite()) throw Error(ErrorKind::NonFinite, "contrastive loss is not finite");
  return l;
}

inline double infonce_loss(const Embedding& emb, const IndicatorMatrix& ind, const Matrix& S,
                           double sigma, bool exclude_self = false) {
  return row_losses(emb, ind, S, sigma, exclude_self).sum();
}

/// Tr(F^T L F).
inline double spectral_trace(const Laplacian& lap, const SpectralEmbedding& spec) {
  return (spec.F.transpose() * lap.L * spec.F).trace();
}

/// Objective of the alternating scheme with every block fixed. The
/// Frobenius term uses the per-row gammas stored in `sim`.
inline LossBreakdown total_loss(const Embedding& emb, const IndicatorMatrix& ind,
                                const SimilarityMatrix& sim, const SpectralEmbedding& spec,
                                const HyperParams& p) {
  LossBreakdown out;
  out.contrastive = infonce_loss(emb, ind, sim.S, p.sigma, p.exclude_self);
  const Vector row_sq = sim.S.rowwise().squaredNorm();
  out.frobenius = sim.gammas.size() == row_sq.size() ? sim.gammas.dot(row_sq) : 0.0;
  out.frobenius_global = sim.gamma * sim.S.squaredNorm();
  out.spectral = p.lambda != 0.0 ? 2.0 * p.lambda * spectral_trace(laplacian(sim), spec) : 0.0;
  out.total = out.contrastive + out.frobenius + out.spectral;
  return out;
}

/// Contrastive term viewed as a function of P with H, S fixed; the P-step
/// objective.
class ContrastiveObjective {
 public:
  ContrastiveObjective(const Matrix& X, const IndicatorMatrix& ind, const Matrix& S, double sigma,
                       bool exclude_self = false)
      : X_(X), W_(detail::positive_weights(ind, S, exclude_self)), sigma_(sigma),
        exclude_self_(exclude_self) {
    require(X.cols() == S.rows(), ErrorKind::DimensionMismatch, "X and S disagree on n");
    require(sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");
    row_weight_ = W_.rowwise().sum();
  }

  double loss(const Matrix& P) const {
    check(P);
    const CosineTable cos = cosine_table(P.transpose() * X_);
    const Matrix LS = log_softmax(cos.C, sigma_, exclude_self_);
    const double v = detail::row_losses_from(W_, LS).sum();
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "contrastive loss is not finite");
    return v;
  }

  // dL/dC_ik = (w_i p_ik - W_ik) / sigma with w_i = sum_j W_ij. Through
  // C = U^T U this gives dL/dU = U (G + G^T), then each column goes through
  // the normalisation u = y / |y| and finally dL/dP = X (dL/dY)^T.
  Matrix gradient(const Matrix& P, double* loss_out = nullptr) const {
    check(P);
    const Matrix Y = P.transpose() * X_;
    const CosineTable cos = cosine_table(Y);
    const Matrix LS = log_softmax(cos.C, sigma_, exclude_self_);
    if (loss_out) *loss_out = detail::row_losses_from(W_, LS).sum();

    const Index n = Y.cols();
    Matrix G(n, n);
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i) {
        const double p = (exclude_self_ && i == k) ? 0.0 : std::exp(LS(i, k));
        G(i, k) = (row_weight_(i) * p - W_(i, k)) / sigma_;
      }
    const Matrix GU = cos.U * (G + G.transpose());

    Matrix dY(Y.rows(), n);
    for (Index i = 0; i < n; ++i) {
      const auto u = cos.U.col(i);
      if (Y.col(i).norm() >= kNormGuard)
        dY.col(i) = (GU.col(i) - u * u.dot(GU.col(i))) / cos.norms(i);
      else
        dY.col(i) = GU.col(i) / kNormGuard;
    }
    Matrix g = X_ * dY.transpose();
    if (!g.allFinite()) throw Error(ErrorKind::NonFinite, "gradient is not finite");
    return g;
  }

  Index input_dim() const { return X_.rows(); }

 private:
  void check(const Matrix& P) const {
    require(P.rows() == X_.rows(), ErrorKind::DimensionMismatch,
            "P has " + std::to_string(P.rows()) + " rows, X has " + std::to_string(X_.rows()));
  }

  const Matrix& X_;
  Matrix W_;
  Vector row_weight_;
  double sigma_;
  bool exclude_self_;
};

/// Central differences of an arbitrary scalar function of a matrix.
template <typename Fn>
Matrix central_difference(Fn&& f, const Matrix& P, double h = 1e-5) {
  require(h > 0.0, ErrorKind::InvalidArgument, "step must be positive");
  Matrix g(P.rows(), P.cols());
  Matrix probe = P;
  for (Index b = 0; b < P.cols(); ++b)
    for (Index a = 0; a < P.rows(); ++a) {
      const double orig = probe(a, b);
      probe(a, b) = orig + h;
      const double up = f(probe);
      probe(a, b) = orig - h;
      const double down = f(probe);
      probe(a, b) = orig;
      g(a, b) = (up - down) / (2.0 * h);
    }
  return g;
}

inline Matrix fd_gradient(const Matrix& X, const Matrix& P, const IndicatorMatrix& ind,
                          const Matrix& S, double sigma, double h = 1e-5,
                          bool exclude_self = false) {
  const ContrastiveObjective obj(X, ind, S, sigma, exclude_self);
  return central_difference([&](const Matrix& Q) { return obj.loss(Q); }, P, h);
}

inline double max_relative_error(const Matrix& g, const Matrix& g_fd) {
  return ((g - g_fd).array().abs() / (g_fd.array().abs() + 1e-8)).maxCoeff();
}

/// Analytic gradient of the contrastive term; optionally cross-checked
/// against central differences with step `fd_step`.
inline GradientReport gradient(const Matrix& X, const Matrix& P, const IndicatorMatrix& ind,
                               const Matrix& S, double sigma,
                               std::optional<double> fd_step = std::nullopt,
                               bool exclude_self = false) {
  const ContrastiveObjective obj(X, ind, S, sigma, exclude_self);
  GradientReport rep;
  rep.grad = obj.gradient(P);
  if (fd_step) {
    rep.fd_grad = central_difference([&](const Matrix& Q) { return obj.loss(Q); }, P, *fd_step);
    rep.max_rel_err = max_relative_error(rep.grad, *rep.fd_grad);
  }
  return rep;
}

struct MutualInfoBound {
  Vector bound;               // log((n-1)/n_i) - l_i
  std::vector<int> positives; // n_i
  std::vector<bool> vacuous;  // n_i == 0, bound reported as 0
};

/// Per-sample lower-bound diagnostic -l_i <= I - log((n-1)/n_i), reported as
/// b_i = log((n-1)/n_i) - l_i. This is not an estimate of the information itself.
inline MutualInfoBound mi_lower_bound(const Embedding& emb, const IndicatorMatrix& ind,
                                      const Matrix& S, double sigma, bool exclude_self = false) {
  const Vector l = row_losses(emb, ind, S, sigma, exclude_self);
  const Matrix W = ind.H.cwiseProduct(S);
  const Index n = S.rows();
  MutualInfoBound out;
  out.bound = Vector::Zero(n);
  out.positives.assign(static_cast<std::size_t>(n), 0);
  out.vacuous.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    int ni = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i && W(i, j) > 0.0) ++ni;
    out.positives[static_cast<std::size_t>(i)] = ni;
    if (ni == 0) {
      out.vacuous[static_cast<std::size_t>(i)] = true;
      continue;
    }
    out.bound(i) = std::log(static_cast<double>(n - 1) / ni) - l(i);
  }
  return out;
}

}  // namespace clfefa
