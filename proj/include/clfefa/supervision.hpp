// Label-compatibility mask shared by all three supervision modes.
#pragma once

#include "clfefa/core.hpp"

namespace clfefa {

/// H is n x n with H_ij = 0 exactly when both samples carry labels and the
/// labels differ; every other entry (the diagonal included) is 1.
struct IndicatorMatrix {
  Matrix H;

  Index size() const { return H.rows(); }
};

inline void check_mode(const Dataset& ds, SupervisionMode mode) {
  const Index n = ds.size();
  const Index labeled = ds.labeled_count();
  switch (mode) {
    case SupervisionMode::Unsupervised:
      break;
    case SupervisionMode::Supervised:
      require(labeled == n, ErrorKind::ModeLabelMismatch,
              "supervised mode needs every sample labeled (" + std::to_string(n - labeled) +
                  " unlabeled)");
      break;
    case SupervisionMode::SemiSupervised:
      require(labeled >= 1 && labeled < n, ErrorKind::ModeLabelMismatch,
              "semi-supervised mode needs both labeled and unlabeled samples");
      break;
  }
}

inline IndicatorMatrix build_indicator(const Dataset& ds, SupervisionMode mode) {
  check_mode(ds, mode);
  const Index n = ds.size();
  IndicatorMatrix ind{Matrix::Ones(n, n)};
  if (mode == SupervisionMode::Unsupervised) return ind;

  for (Index i = 0; i < n; ++i) {
    if (!ds.is_labeled(i)) continue;
    for (Index j = i + 1; j < n; ++j) {
      if (ds.is_labeled(j) &&
          ds.labels[static_cast<std::size_t>(i)] != ds.labels[static_cast<std::size_t>(j)]) {
        ind.H(i, j) = 0.0;
        ind.H(j, i) = 0.0;
      }
    }
  }
  return ind;
}

}  // namespace clfefa
