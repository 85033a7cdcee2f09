// Shared domain types for contrastive feature extraction: datasets, hyper-
// parameters, the error family, the deterministic RNG and a few matrix helpers.
//
// Convention: samples are columns. X is D x n, a projection P is D x d and the
// embedding is Y = P^T X (d x n).
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clfefa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Class ids are 1-based; 0 marks an unlabeled sample.
inline constexpr int kUnlabeled = 0;
using Labels = std::vector<int>;

enum class ErrorKind {
  NonFiniteInput,
  DimensionMismatch,
  InvalidArgument,
  ModeLabelMismatch,
  NonFiniteIntermediate,
  InsufficientNeighbors,
  DegenerateRow,
  EigenFailure,
  NonFinite,
  EmptyTrainingSet,
  LengthMismatch,
  SplitInfeasible,
  BadMagic,
  TruncatedPayload,
  CountMismatch,
  SubsampleTooLarge,
  RaggedRows,
  NonNumericCell,
  MissingColumn,
  IoError,
  ConfigError,
};

inline std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ModeLabelMismatch: return "ModeLabelMismatch";
    case ErrorKind::NonFiniteIntermediate: return "NonFiniteIntermediate";
    case ErrorKind::InsufficientNeighbors: return "InsufficientNeighbors";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SplitInfeasible: return "SplitInfeasible";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::SubsampleTooLarge: return "SubsampleTooLarge";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }
  /// The text without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

/// Deterministic generator. mt19937_64's output sequence is fixed by the
/// standard; the distributions below are written out so streams are also
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    // rejection sampling keeps this unbiased
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  double normal() {
    if (cached_) {
      cached_ = false;
      return cache_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cache_ = r * std::sin(theta);
    cached_ = true;
    return r * std::cos(theta);
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool cached_ = false;
  double cache_ = 0.0;
};

/// Derives an independent seed for a sub-task (repeat, grid cell, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class SupervisionMode { Unsupervised, Supervised, SemiSupervised };

inline std::string_view to_string(SupervisionMode m) {
  switch (m) {
    case SupervisionMode::Unsupervised: return "unsupervised";
    case SupervisionMode::Supervised: return "supervised";
    case SupervisionMode::SemiSupervised: return "semi";
  }
  return "unsupervised";
}

inline SupervisionMode parse_mode(std::string_view s) {
  if (s == "unsupervised" || s == "u") return SupervisionMode::Unsupervised;
  if (s == "supervised" || s == "s") return SupervisionMode::Supervised;
  if (s == "semi" || s == "semisupervised" || s == "semi-supervised")
    return SupervisionMode::SemiSupervised;
  throw Error(ErrorKind::ConfigError, "unknown mode '" + std::string(s) + "'");
}

struct Dataset {
  Matrix X;       // D x n
  Labels labels;  // size n, kUnlabeled for missing; may be empty if no labels at all
  int classes = 1;
  std::string name;

  Index dim() const { return X.rows(); }
  Index size() const { return X.cols(); }
  bool has_labels() const { return !labels.empty(); }
  bool is_labeled(Index i) const {
    return has_labels() && labels[static_cast<std::size_t>(i)] != kUnlabeled;
  }
  Index labeled_count() const {
    if (!has_labels()) return 0;
    return static_cast<Index>(
        std::count_if(labels.begin(), labels.end(), [](int c) { return c != kUnlabeled; }));
  }
};

inline void validate(const Dataset& ds) {
  require(ds.X.rows() >= 1, ErrorKind::InvalidArgument, "dataset needs D >= 1");
  require(ds.X.cols() >= 2, ErrorKind::InvalidArgument, "dataset needs n >= 2");
  require(ds.X.allFinite(), ErrorKind::NonFiniteInput, "X contains NaN or Inf");
  require(ds.classes >= 1, ErrorKind::InvalidArgument, "class count must be >= 1");
  if (ds.has_labels()) {
    require(static_cast<Index>(ds.labels.size()) == ds.X.cols(), ErrorKind::LengthMismatch,
            "label count differs from sample count");
    for (int c : ds.labels)
      require(c == kUnlabeled || (c >= 1 && c <= ds.classes), ErrorKind::InvalidArgument,
              "label " + std::to_string(c) + " outside 1.." + std::to_string(ds.classes));
  }
}

/// Restricts a dataset to the given sample indices (in order).
inline Dataset select_columns(const Dataset& ds, const std::vector<Index>& idx) {
  Dataset out;
  out.X.resize(ds.X.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.X.col(static_cast<Index>(j)) = ds.X.col(idx[j]);
  if (ds.has_labels()) {
    out.labels.reserve(idx.size());
    for (Index i : idx) out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }
  out.classes = ds.classes;
  out.name = ds.name;
  return out;
}

struct AdamParams {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class InitScheme { Pca, RandomOrthonormal };

struct HyperParams {
  double sigma = 1.0;
  double lambda = 1.0;
  int k = 6;
  int c = 2;
  int d = 2;
  AdamParams adam;
  double tol_inner = 1e-3;
  double tol_outer = 1e-3;
  int max_inner = 500;
  int max_outer = 50;
  std::uint64_t seed = 0;

  InitScheme init = InitScheme::Pca;
  /// Drop the k = i term from the softmax denominator (ablation).
  bool exclude_self = false;
  /// Double lambda while the graph has fewer than c components, halve while more.
  bool adaptive_lambda = false;
  /// Forbid similarity mass on label-incompatible pairs (H_ij = 0).
  bool mask_incompatible = true;
};

/// Checks parameter ranges against a problem of n samples in D dimensions.
inline void validate(const HyperParams& p, Index n, Index D) {
  auto bad = [](const std::string& w) { throw Error(ErrorKind::InvalidArgument, w); };
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) bad("sigma must be positive");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) bad("lambda must be nonnegative");
  if (!(p.adam.alpha > 0.0)) bad("adam alpha must be positive");
  if (!(p.adam.beta1 > 0.0 && p.adam.beta1 < 1.0)) bad("adam beta1 must lie in (0,1)");
  if (!(p.adam.beta2 > 0.0 && p.adam.beta2 < 1.0)) bad("adam beta2 must lie in (0,1)");
  if (!(p.adam.epsilon > 0.0)) bad("adam epsilon must be positive");
  if (!(p.tol_inner > 0.0) || !(p.tol_outer > 0.0)) bad("tolerances must be positive");
  if (p.max_inner < 0 || p.max_outer < 1) bad("iteration caps out of range");
  if (p.k < 1 || p.k > n - 2) bad("k must satisfy 1 <= k <= n-2");
  if (p.c < 1 || p.c > n) bad("c must satisfy 1 <= c <= n");
  if (p.d < 1 || p.d > D) bad("d must satisfy 1 <= d <= D");
}

struct Projection {
  Matrix P;  // D x d

  Index input_dim() const { return P.rows(); }
  Index output_dim() const { return P.cols(); }
};

struct Embedding {
  Matrix Y;  // d x n
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

enum class NormalizeScheme { None, UnitRange, ZScore };

inline NormalizeScheme parse_normalize(std::string_view s) {
  if (s == "none") return NormalizeScheme::None;
  if (s == "unit_range") return NormalizeScheme::UnitRange;
  if (s == "zscore") return NormalizeScheme::ZScore;
  throw Error(ErrorKind::ConfigError, "unknown normalize scheme '" + std::string(s) + "'");
}

inline std::string_view to_string(NormalizeScheme s) {
  switch (s) {
    case NormalizeScheme::None: return "none";
    case NormalizeScheme::UnitRange: return "unit_range";
    case NormalizeScheme::ZScore: return "zscore";
  }
  return "none";
}

/// unit_range: 8-bit pixel data (integral values inside 0..255) is divided by
/// 255, data already inside [0,1] is kept, anything else is min-max scaled per
/// feature. zscore: per-feature mean 0 and, where the std is positive, std 1.
inline Dataset normalize(const Dataset& ds, NormalizeScheme scheme) {
  require(ds.X.allFinite(), ErrorKind::NonFiniteInput, "X contains NaN or Inf");
  Dataset out = ds;
  switch (scheme) {
    case NormalizeScheme::None:
      break;
    case NormalizeScheme::UnitRange: {
      const double lo = ds.X.size() ? ds.X.minCoeff() : 0.0;
      const double hi = ds.X.size() ? ds.X.maxCoeff() : 0.0;
      const bool integral =
          (ds.X.array() == ds.X.array().round()).all();
      if (lo >= 0.0 && hi <= 255.0 && integral && hi > 1.0) {
        out.X = ds.X / 255.0;
      } else if (lo >= 0.0 && hi <= 1.0) {
        // already unit range
      } else {
        for (Index f = 0; f < ds.X.rows(); ++f) {
          const double mn = ds.X.row(f).minCoeff();
          const double mx = ds.X.row(f).maxCoeff();
          if (mx > mn)
            out.X.row(f) = (ds.X.row(f).array() - mn) / (mx - mn);
          else
            out.X.row(f).setZero();
        }
      }
      break;
    }
    case NormalizeScheme::ZScore: {
      const double n = static_cast<double>(ds.X.cols());
      for (Index f = 0; f < ds.X.rows(); ++f) {
        const double mean = ds.X.row(f).sum() / n;
        auto centered = (ds.X.row(f).array() - mean).eval();
        const double sd = std::sqrt(centered.square().sum() / n);
        out.X.row(f) = sd > 0.0 ? (centered / sd).eval() : centered;
      }
      break;
    }
  }
  return out;
}

inline Embedding project(const Matrix& X, const Projection& proj) {
  require(X.rows() == proj.P.rows(), ErrorKind::DimensionMismatch,
          "X has " + std::to_string(X.rows()) + " features, P expects " +
              std::to_string(proj.P.rows()));
  return Embedding{proj.P.transpose() * X};
}

/// Mean and population standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace clfefa
