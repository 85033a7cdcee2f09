#include "clfefa/supervision.hpp"

#include <gtest/gtest.h>

using namespace clfefa;

namespace {

Dataset labelled(Labels labels, int classes) {
  Dataset ds;
  ds.X = Matrix::Zero(2, static_cast<Index>(labels.size()));
  ds.labels = std::move(labels);
  ds.classes = classes;
  return ds;
}

}  // namespace

TEST(Indicator, UnsupervisedIsAllOnes) {
  Dataset ds;
  ds.X = Matrix::Zero(2, 3);
  EXPECT_EQ(build_indicator(ds, SupervisionMode::Unsupervised).H, Matrix::Ones(3, 3));
  // labels are ignored entirely
  ds.labels = {1, 2, 3};
  ds.classes = 3;
  EXPECT_EQ(build_indicator(ds, SupervisionMode::Unsupervised).H, Matrix::Ones(3, 3));
}

TEST(Indicator, SupervisedBlocks) {
  Matrix expect(3, 3);
  expect << 1, 1, 0,
            1, 1, 0,
            0, 0, 1;
  EXPECT_EQ(build_indicator(labelled({1, 1, 2}, 2), SupervisionMode::Supervised).H, expect);
}

TEST(Indicator, SemiSupervisedOnlyLabelledConflictsAreZero) {
  Matrix expect(3, 3);
  expect << 1, 1, 0,
            1, 1, 1,
            0, 1, 1;
  EXPECT_EQ(build_indicator(labelled({1, kUnlabeled, 2}, 2), SupervisionMode::SemiSupervised).H,
            expect);
}

TEST(Indicator, ModeLabelMismatch) {
  try {
    build_indicator(labelled({1, kUnlabeled, 2}, 2), SupervisionMode::Supervised);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ModeLabelMismatch);
  }
  EXPECT_THROW(build_indicator(labelled({1, 1, 2}, 2), SupervisionMode::SemiSupervised), Error);
  EXPECT_THROW(build_indicator(labelled({0, 0, 0}, 2), SupervisionMode::SemiSupervised), Error);
}

TEST(Indicator, PropertiesOverRandomLabels) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(15));
    const int C = 1 + static_cast<int>(rng.index(4));
    Labels labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(rng.uniform() < 0.3 ? kUnlabeled : 1 + static_cast<int>(rng.index(C)));
    const Dataset ds = labelled(labels, C);
    const Index lab = ds.labeled_count();
    SupervisionMode mode = SupervisionMode::Unsupervised;
    if (lab == n) mode = SupervisionMode::Supervised;
    else if (lab > 0) mode = SupervisionMode::SemiSupervised;
    const Matrix H = build_indicator(ds, mode).H;

    EXPECT_EQ(H, H.transpose());
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(H(i, i), 1.0);
      for (int j = 0; j < n; ++j) {
        const bool conflict = mode != SupervisionMode::Unsupervised && labels[i] != kUnlabeled &&
                              labels[j] != kUnlabeled && labels[i] != labels[j];
        EXPECT_EQ(H(i, j), conflict ? 0.0 : 1.0);
      }
    }
  }
}

TEST(Indicator, SupervisedIsBlockDiagonalAfterSortingByClass) {
  Rng rng(5);
  Labels labels;
  for (int i = 0; i < 20; ++i) labels.push_back(1 + static_cast<int>(rng.index(3)));
  const Matrix H = build_indicator(labelled(labels, 3), SupervisionMode::Supervised).H;
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return labels[a] < labels[b]; });
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      EXPECT_EQ(H(perm[a], perm[b]), labels[perm[a]] == labels[perm[b]] ? 1.0 : 0.0);
}
