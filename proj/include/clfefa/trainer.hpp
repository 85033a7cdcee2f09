// Alternating optimisation: spectral F step, closed-form S step, Adam loop
// on P. Outer and inner loops both stop on |L_t - L_{t+1}| <= tol.
#pragma once

#include "clfefa/core.hpp"
#include "clfefa/graph.hpp"
#include "clfefa/objective.hpp"
#include "clfefa/supervision.hpp"

#include <chrono>

namespace clfefa {

struct AdamState {
  Matrix m;   // first moment
  Matrix v;   // second raw moment
  int t = 0;  // steps taken

  static AdamState zeros(Index rows, Index cols) {
    return AdamState{Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), 0};
  }
};

/// One bias-corrected Adam update. Returns the advanced state and the new P.
inline std::pair<AdamState, Matrix> adam_step(const AdamState& state, const Matrix& P,
                                              const Matrix& g, const AdamParams& a) {
  require(g.rows() == P.rows() && g.cols() == P.cols() && state.m.rows() == P.rows() &&
              state.m.cols() == P.cols(),
          ErrorKind::DimensionMismatch, "Adam state, gradient and P differ in shape");
  AdamState next;
  next.t = state.t + 1;
  next.m = a.beta1 * state.m + (1.0 - a.beta1) * g;
  next.v = a.beta2 * state.v + (1.0 - a.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(a.beta1, next.t);
  const double c2 = 1.0 - std::pow(a.beta2, next.t);
  const Matrix m_hat = next.m / c1;
  const Matrix v_hat = next.v / c2;
  Matrix P_next = P - a.alpha * (m_hat.array() / (v_hat.array().sqrt() + a.epsilon)).matrix();
  return {std::move(next), std::move(P_next)};
}

struct ProjectionStep {
  Matrix P;                 // lowest-loss iterate seen
  int inner_steps = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // loss of the returned P
  AdamState state;
};

/// Adam on the contrastive term with H and S fixed. Stops when successive
/// losses differ by at most tol_inner or after max_inner steps, and returns the
/// best iterate along the way (Adam is not monotone).
inline ProjectionStep optimize_projection(const Matrix& X, const Matrix& P0,
                                          const IndicatorMatrix& ind, const Matrix& S,
                                          const HyperParams& p) {
  const ContrastiveObjective obj(X, ind, S, p.sigma, p.exclude_self);
  ProjectionStep out;
  out.state = AdamState::zeros(P0.rows(), P0.cols());

  Matrix P = P0;
  double loss = 0.0;
  Matrix g = obj.gradient(P, &loss);
  out.initial_loss = loss;
  out.P = P0;
  out.final_loss = loss;

  double prev = loss;
  for (int t = 1; t <= p.max_inner; ++t) {
    auto [state, next] = adam_step(out.state, P, g, p.adam);
    out.state = std::move(state);
    P = std::move(next);
    try {
      g = obj.gradient(P, &loss);
    } catch (const Error& e) {
      throw Error(e.kind(), "Adam step " + std::to_string(t) + ": " + e.message());
    }
    if (!std::isfinite(loss))
      throw Error(ErrorKind::NonFinite, "Adam step " + std::to_string(t) + " produced a non-finite loss");
    out.inner_steps = t;
    if (loss < out.final_loss) {
      out.final_loss = loss;
      out.P = P;
    }
    if (std::abs(loss - prev) <= p.tol_inner) break;
    prev = loss;
  }
  return out;
}

/// Top-d principal directions of X (columns of the D x d result), sign-fixed so
/// the largest-magnitude entry of each is positive.
inline Matrix pca_projection(const Matrix& X, int d) {
  const Vector mean = X.rowwise().mean();
  const Matrix centered = X.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(X.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "PCA eigensolver failed");
  const Index D = X.rows();
  Matrix P(D, d);
  for (int j = 0; j < d; ++j) {
    P.col(j) = es.eigenvectors().col(D - 1 - j);
    Index arg = 0;
    for (Index i = 1; i < D; ++i)
      if (std::abs(P(i, j)) > std::abs(P(arg, j))) arg = i;
    if (P(arg, j) < 0.0) P.col(j) *= -1.0;
  }
  return P;
}

inline Matrix random_orthonormal(Index D, Index d, Rng& rng) {
  const Matrix A = rng.normal_matrix(D, d);
  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix Q = qr.householderQ() * Matrix::Identity(D, d);
  const Matrix R = qr.matrixQR().topLeftCorner(d, d);
  for (Index j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

/// Objective values around each block update of one outer iteration.
struct StepCheck {
  double f_before = 0.0, f_after = 0.0;
  double s_before = 0.0, s_after = 0.0;
  double p_before = 0.0, p_after = 0.0;
};

struct FitReport {
  Projection projection;
  SimilarityMatrix similarity;
  SpectralEmbedding spectral;
  std::vector<double> loss_trace;   // total objective after each outer iteration
  std::vector<int> inner_steps;     // Adam steps per outer iteration
  std::vector<StepCheck> checks;    // block-wise objective values per outer iteration
  LossBreakdown final_loss;
  long total_adam_steps = 0;
  int components = 0;
  bool converged = false;
  double lambda_used = 0.0;
  double wallclock = 0.0;
};

inline Matrix initial_projection(const Matrix& X, const HyperParams& p) {
  if (p.init == InitScheme::Pca) return pca_projection(X, p.d);
  Rng rng(derive_seed(p.seed, 0x1A17));
  return random_orthonormal(X.rows(), p.d, rng);
}

inline FitReport fit(const Dataset& ds, SupervisionMode mode, HyperParams p) {
  const auto start = std::chrono::steady_clock::now();
  validate(ds);
  validate(p, ds.size(), ds.dim());
  if (mode == SupervisionMode::Supervised) p.lambda = 0.0;
  const IndicatorMatrix ind = build_indicator(ds, mode);
  const Matrix& X = ds.X;
  const Index n = ds.size();

  FitReport rep;
  Matrix P = initial_projection(X, p);
  SimilarityMatrix sim = initial_similarity(X, ind, p.k);
  SpectralEmbedding spec{Matrix::Identity(n, p.c), Vector::Zero(p.c)};

  auto objective = [&](const SimilarityMatrix& s, const SpectralEmbedding& f, const Matrix& proj) {
    return total_loss(project(X, Projection{proj}), ind, s, f, p).total;
  };

  for (int outer = 0; outer < p.max_outer; ++outer) {
    StepCheck chk;

    chk.f_before = objective(sim, spec, P);
    spec = update_spectral(laplacian(sim), p.c);
    chk.f_after = objective(sim, spec, P);

    SimilarityMatrix next = update_similarity(project(X, Projection{P}), spec, ind, graph_params(p));
    SimilarityMatrix old = sim;
    old.gammas = next.gammas;
    old.gamma = next.gamma;
    chk.s_before = objective(old, spec, P);
    sim = std::move(next);
    chk.s_after = objective(sim, spec, P);

    ProjectionStep step = optimize_projection(X, P, ind, sim.S, p);
    chk.p_before = chk.s_after;
    P = std::move(step.P);
    rep.final_loss = total_loss(project(X, Projection{P}), ind, sim, spec, p);
    chk.p_after = rep.final_loss.total;

    rep.checks.push_back(chk);
    rep.loss_trace.push_back(rep.final_loss.total);
    rep.inner_steps.push_back(step.inner_steps);
    rep.total_adam_steps += step.inner_steps;

    if (p.adaptive_lambda && mode != SupervisionMode::Supervised) {
      const int comp = connected_components(sim);
      if (comp < p.c) p.lambda *= 2.0;
      else if (comp > p.c) p.lambda /= 2.0;
    }

    const std::size_t T = rep.loss_trace.size();
    if (T >= 2 && std::abs(rep.loss_trace[T - 1] - rep.loss_trace[T - 2]) <= p.tol_outer) {
      rep.converged = true;
      break;
    }
  }

  rep.projection = Projection{std::move(P)};
  rep.similarity = std::move(sim);
  rep.spectral = std::move(spec);
  rep.components = connected_components(rep.similarity);
  rep.lambda_used = p.lambda;
  rep.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace clfefa
