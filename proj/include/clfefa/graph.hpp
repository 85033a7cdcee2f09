// Adaptive similarity graph: closed-form row updates of S on the simplex,
// per-row gamma selection, Laplacian, spectral embedding F and component count.
#pragma once

#include "clfefa/core.hpp"
#include "clfefa/kernel.hpp"
#include "clfefa/supervision.hpp"

#include <ostream>

namespace clfefa {

/// Entries at or below this count as zero when measuring row support.
inline constexpr double kSupportTol = 1e-14;
/// Floor applied to gamma when the k+1 smallest distances tie.
inline constexpr double kGammaFloor = 1e-12;

struct SimilarityMatrix {
  Matrix S;                // n x n, row-stochastic, zero diagonal
  std::vector<int> support;  // nonzero count per row
  Vector gammas;           // per-row gamma used by the last update
  double gamma = 0.0;      // mean of gammas

  Index size() const { return S.rows(); }
};

struct Laplacian {
  Matrix L;       // D_S - (S + S^T)/2
  Vector degree;  // diagonal of D_S
};

struct SpectralEmbedding {
  Matrix F;        // n x c, orthonormal columns
  Vector eigvals;  // ascending
};

inline int count_support(const Eigen::Ref<const Vector>& row) {
  return static_cast<int>((row.array() > kSupportTol).count());
}

/// d_ij = -H_ij log softmax_ij + lambda |f_i - f_j|^2, with d_ii = +inf.
inline Matrix pairwise_distances(const Embedding& emb, const SpectralEmbedding& spec,
                                 const IndicatorMatrix& ind, double sigma, double lambda,
                                 bool exclude_self = false) {
  const Index n = emb.Y.cols();
  require(ind.size() == n && spec.F.rows() == n, ErrorKind::DimensionMismatch,
          "Y, F and H disagree on the sample count");
  require(sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");

  const CosineTable cos = cosine_table(emb.Y);
  const Matrix LS = log_softmax(cos.C, sigma, exclude_self);

  // |f_i - f_j|^2 through the Gram matrix
  const Matrix gram = spec.F * spec.F.transpose();
  const Vector sq = gram.diagonal();

  const double inf = std::numeric_limits<double>::infinity();
  Matrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j) {
        d(i, j) = inf;
        continue;
      }
      const double dy = ind.H(i, j) != 0.0 ? -ind.H(i, j) * LS(i, j) : 0.0;
      const double df = lambda != 0.0 ? std::max(sq(i) + sq(j) - 2.0 * gram(i, j), 0.0) : 0.0;
      d(i, j) = dy + lambda * df;
      if (!std::isfinite(d(i, j)))
        throw Error(ErrorKind::NonFiniteIntermediate,
                    "distance (" + std::to_string(i) + "," + std::to_string(j) + ") not finite");
    }
  }
  return d;
}

/// gamma_i = (k/2) d_(k+1) - (1/2) sum_{j<=k} d_(j), floored at kGammaFloor.
/// `sorted` must be ascending.
inline double gamma_for_row(const std::vector<double>& sorted, int k) {
  require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
  const auto finite = std::count_if(sorted.begin(), sorted.end(),
                                    [](double v) { return std::isfinite(v); });
  require(finite >= k + 1, ErrorKind::InsufficientNeighbors,
          "need " + std::to_string(k + 1) + " finite distances, have " + std::to_string(finite));
  double head = 0.0;
  for (int j = 0; j < k; ++j) head += sorted[static_cast<std::size_t>(j)];
  const double g = 0.5 * k * sorted[static_cast<std::size_t>(k)] - 0.5 * head;
  return std::max(g, kGammaFloor);
}

namespace detail {

inline std::vector<Index> argsort(const Eigen::Ref<const Vector>& v) {
  std::vector<Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
  return order;
}

inline std::vector<double> sorted_values(const Eigen::Ref<const Vector>& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Mean of the per-row gammas of a distance matrix.
inline double gamma_global(const Matrix& d, int k) {
  double acc = 0.0;
  for (Index i = 0; i < d.rows(); ++i) {
    const Vector row = d.row(i).transpose();
    acc += gamma_for_row(detail::sorted_values(row), k);
  }
  return d.rows() ? acc / static_cast<double>(d.rows()) : 0.0;
}

/// Solves min_s |s + d/(2 gamma)|^2 over the probability simplex. The fast
/// path takes the k smallest distances as support with
/// eta = 1/k + sum_{j<=k} d_(j) / (2 k gamma); when gamma comes from
/// gamma_for_row that support is exact. Otherwise the support size is found by
/// scanning the sorted distances. When gamma sits at its floor, ties at the
/// support boundary go to the lower original index.
inline Vector update_similarity_row(const Eigen::Ref<const Vector>& d, double gamma, int k) {
  require(gamma > 0.0, ErrorKind::InvalidArgument, "gamma must be positive");
  require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
  const Index n = d.size();
  const std::vector<Index> order = detail::argsort(d);
  Index finite = 0;
  while (finite < n && std::isfinite(d(order[static_cast<std::size_t>(finite)]))) ++finite;
  require(finite > 0, ErrorKind::DegenerateRow, "every distance is +inf");
  require(finite >= k, ErrorKind::InsufficientNeighbors,
          "need " + std::to_string(k) + " finite distances, have " + std::to_string(finite));

  auto at = [&](Index r) { return d(order[static_cast<std::size_t>(r)]); };
  const double scale = 1.0 / (2.0 * gamma);
  // s_j = 1/m + (mean of the m smallest - d_j) / (2 gamma); this form stays
  // exact under ties even when gamma sits at its floor
  auto value = [&](Index m, double head, double dj) {
    return 1.0 / static_cast<double>(m) + scale * (head / static_cast<double>(m) - dj);
  };

  Index m = k;
  double head = 0.0;
  for (Index r = 0; r < k; ++r) head += at(r);

  const bool last_positive = value(k, head, at(k - 1)) > 0.0 || at(k - 1) == at(0);
  // a tie across the boundary only decides the support when gamma is floored
  const bool next_closed = k == finite || value(k, head, at(k)) <= 1e-12 ||
                           (gamma <= kGammaFloor && at(k) == at(k - 1));
  if (!(last_positive && next_closed)) {
    // general support search: largest m with a positive m-th entry
    double run = 0.0;
    m = 0;
    for (Index r = 0; r < finite; ++r) {
      run += at(r);
      if (value(r + 1, run, at(r)) > 0.0) {
        m = r + 1;
        head = run;
      }
    }
  }

  Vector s = Vector::Zero(n);
  for (Index r = 0; r < m; ++r) {
    const Index j = order[static_cast<std::size_t>(r)];
    s(j) = std::clamp(value(m, head, d(j)), 0.0, 1.0);
  }
  return s;
}

struct GraphParams {
  double sigma = 1.0;
  double lambda = 0.0;
  int k = 6;
  bool exclude_self = false;
  bool mask_incompatible = true;
};

inline GraphParams graph_params(const HyperParams& p) {
  return GraphParams{p.sigma, p.lambda, p.k, p.exclude_self, p.mask_incompatible};
}

/// One closed-form S step from a ready distance matrix (diagonal already +inf).
/// Rows with at most k admissible neighbours take gamma from k_i = finite - 1
/// and may keep every admissible neighbour.
inline SimilarityMatrix similarity_from_distances(Matrix d, const IndicatorMatrix& ind, int k,
                                                  bool mask_incompatible) {
  const Index n = d.rows();
  const double inf = std::numeric_limits<double>::infinity();
  if (mask_incompatible) {
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (ind.H(i, j) == 0.0) d(i, j) = inf;
  }

  SimilarityMatrix sim;
  sim.S = Matrix::Zero(n, n);
  sim.support.assign(static_cast<std::size_t>(n), 0);
  sim.gammas = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const Vector row = d.row(i).transpose();
    const std::vector<double> sorted = detail::sorted_values(row);
    const auto finite = static_cast<int>(std::count_if(
        sorted.begin(), sorted.end(), [](double v) { return std::isfinite(v); }));
    if (finite == 0)
      throw Error(ErrorKind::DegenerateRow, "row " + std::to_string(i) + " has no admissible neighbour");
    try {
      Vector s;
      double g = kGammaFloor;
      if (finite == 1) {
        s = update_similarity_row(row, g, 1);
      } else {
        g = gamma_for_row(sorted, std::min(k, finite - 1));
        s = update_similarity_row(row, g, std::min(k, finite));
      }
      sim.S.row(i) = s.transpose();
      sim.gammas(i) = g;
      sim.support[static_cast<std::size_t>(i)] = count_support(s);
    } catch (const Error& e) {
      throw Error(e.kind(), "row " + std::to_string(i) + ": " + e.message());
    }
  }
  sim.gamma = n ? sim.gammas.mean() : 0.0;
  return sim;
}

inline SimilarityMatrix update_similarity(const Embedding& emb, const SpectralEmbedding& spec,
                                          const IndicatorMatrix& ind, const GraphParams& p) {
  Matrix d = pairwise_distances(emb, spec, ind, p.sigma, p.lambda, p.exclude_self);
  return similarity_from_distances(std::move(d), ind, p.k, p.mask_incompatible);
}

/// Heat-kernel k-NN graph on raw samples, used as the starting S. Bandwidth is
/// the mean k-th neighbour distance; label-incompatible pairs get no mass.
inline SimilarityMatrix initial_similarity(const Matrix& X, const IndicatorMatrix& ind, int k) {
  const Index n = X.cols();
  const Vector sq = X.colwise().squaredNorm().transpose();
  Matrix dist2 = (sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * X.transpose() * X)
                     .cwiseMax(0.0);
  const double inf = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) dist2(i, i) = inf;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (ind.H(i, j) == 0.0) dist2(i, j) = inf;

  std::vector<std::vector<Index>> nbrs(static_cast<std::size_t>(n));
  double bandwidth = 0.0;
  int counted = 0;
  for (Index i = 0; i < n; ++i) {
    const Vector row = dist2.row(i).transpose();
    const std::vector<Index> order = detail::argsort(row);
    auto& nb = nbrs[static_cast<std::size_t>(i)];
    for (Index r = 0; r < n && static_cast<int>(nb.size()) < k; ++r)
      if (std::isfinite(row(order[static_cast<std::size_t>(r)])))
        nb.push_back(order[static_cast<std::size_t>(r)]);
    if (!nb.empty()) {
      bandwidth += std::sqrt(row(nb.back()));
      ++counted;
    }
  }
  bandwidth = counted ? bandwidth / counted : 1.0;
  const double t = bandwidth > 0.0 ? bandwidth * bandwidth : 1.0;

  SimilarityMatrix sim;
  sim.S = Matrix::Zero(n, n);
  sim.support.assign(static_cast<std::size_t>(n), 0);
  sim.gammas = Vector::Constant(n, kGammaFloor);
  sim.gamma = kGammaFloor;
  for (Index i = 0; i < n; ++i) {
    const auto& nb = nbrs[static_cast<std::size_t>(i)];
    double total = 0.0;
    for (Index j : nb) total += std::exp(-dist2(i, j) / t);
    for (Index j : nb) {
      // far-apart neighbours can underflow; fall back to uniform weights
      sim.S(i, j) = total > 0.0 ? std::exp(-dist2(i, j) / t) / total
                                : 1.0 / static_cast<double>(nb.size());
    }
    sim.support[static_cast<std::size_t>(i)] = count_support(sim.S.row(i).transpose());
  }
  return sim;
}

inline Laplacian laplacian(const Matrix& S) {
  require(S.rows() == S.cols(), ErrorKind::DimensionMismatch, "S must be square");
  const Matrix sym = 0.5 * (S + S.transpose());
  Laplacian lap;
  lap.degree = sym.rowwise().sum();
  lap.L = -sym;
  lap.L.diagonal() += lap.degree;
  return lap;
}

inline Laplacian laplacian(const SimilarityMatrix& sim) { return laplacian(sim.S); }

/// Eigenvectors of the c smallest eigenvalues, ascending. Each column is signed
/// so that its largest-magnitude entry (first on ties) is positive.
inline SpectralEmbedding update_spectral(const Laplacian& lap, int c) {
  const Index n = lap.L.rows();
  require(c >= 1 && c <= n, ErrorKind::InvalidArgument, "c must satisfy 1 <= c <= n");
  Eigen::SelfAdjointEigenSolver<Matrix> es(lap.L);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "eigensolver did not converge");
  SpectralEmbedding spec;
  spec.F = es.eigenvectors().leftCols(c);
  spec.eigvals = es.eigenvalues().head(c);
  for (Index j = 0; j < c; ++j) {
    Index arg = 0;
    for (Index i = 1; i < n; ++i)
      if (std::abs(spec.F(i, j)) > std::abs(spec.F(arg, j))) arg = i;
    if (spec.F(arg, j) < 0.0) spec.F.col(j) *= -1.0;
  }
  return spec;
}

/// Components of the undirected graph with an edge wherever (S_ij + S_ji)/2 > threshold.
inline int connected_components(const Matrix& S, double threshold = 1e-12) {
  const Index n = S.rows();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  int components = static_cast<int>(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (0.5 * (S(i, j) + S(j, i)) <= threshold) continue;
      const Index a = find(i), b = find(j);
      if (a != b) {
        parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        --components;
      }
    }
  }
  return components;
}

inline int connected_components(const SimilarityMatrix& sim, double threshold = 1e-12) {
  return connected_components(sim.S, threshold);
}

/// Coordinate-list dump: "i j value" per nonzero, 0-based.
inline void write_coo(std::ostream& os, const Matrix& S) {
  os.precision(17);
  for (Index i = 0; i < S.rows(); ++i)
    for (Index j = 0; j < S.cols(); ++j)
      if (S(i, j) != 0.0) os << i << ' ' << j << ' ' << S(i, j) << '\n';
}

}  // namespace clfefa
