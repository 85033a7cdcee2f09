#include "clfefa/core.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace clfefa;

namespace {

Dataset row_dataset(std::initializer_list<double> values) {
  Dataset ds;
  ds.X.resize(1, static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) ds.X(0, i++) = v;
  return ds;
}

}  // namespace

TEST(Normalize, UnitRangeMapsByteEndpoints) {
  const Dataset out = normalize(row_dataset({0, 255}), NormalizeScheme::UnitRange);
  EXPECT_DOUBLE_EQ(out.X(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(out.X(0, 1), 1.0);
}

TEST(Normalize, UnitRangeFallsBackToMinMaxPerFeature) {
  Dataset ds;
  ds.X.resize(2, 3);
  ds.X << -1, 0, 1,
          10, 20, 40;
  const Dataset out = normalize(ds, NormalizeScheme::UnitRange);
  EXPECT_DOUBLE_EQ(out.X(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(out.X(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(out.X(1, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(out.X(1, 2), 1.0);
}

TEST(Normalize, NoneIsIdentity) {
  Rng rng(3);
  Dataset ds;
  ds.X = rng.normal_matrix(4, 7);
  ds.labels = {1, 2, 1, 2, 1, 2, 0};
  ds.classes = 2;
  const Dataset out = normalize(ds, NormalizeScheme::None);
  EXPECT_EQ(out.X, ds.X);
  EXPECT_EQ(out.labels, ds.labels);
}

TEST(Normalize, ZScoreOfTwoPoints) {
  // mean 2, population std 1
  const Dataset out = normalize(row_dataset({1, 3}), NormalizeScheme::ZScore);
  EXPECT_DOUBLE_EQ(out.X(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out.X(0, 1), 1.0);
}

TEST(Normalize, ZScoreIsIdempotent) {
  Rng rng(11);
  Dataset ds;
  ds.X = rng.normal_matrix(5, 40) * 3.0;
  ds.X.row(2).setConstant(4.0);  // zero-variance feature
  const Dataset once = normalize(ds, NormalizeScheme::ZScore);
  const Dataset twice = normalize(once, NormalizeScheme::ZScore);
  EXPECT_LE((once.X - twice.X).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Normalize, RejectsNonFinite) {
  Dataset ds = row_dataset({1, std::numeric_limits<double>::quiet_NaN()});
  try {
    normalize(ds, NormalizeScheme::ZScore);
    FAIL() << "expected NonFiniteInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteInput);
  }
}

TEST(Project, IdentityAndZero) {
  Rng rng(5);
  const Matrix X = rng.normal_matrix(3, 6);
  EXPECT_EQ(project(X, Projection{Matrix::Identity(3, 3)}).Y, X);
  EXPECT_TRUE(project(X, Projection{Matrix::Zero(3, 2)}).Y.isZero(0.0));
}

TEST(Project, MatchesTripleLoop) {
  Rng rng(6);
  const Matrix P = rng.normal_matrix(3, 2);
  const Matrix X = rng.normal_matrix(3, 4);
  const Matrix Y = project(X, Projection{P}).Y;
  const Matrix ref = oracle::naive_projection(P, X);
  EXPECT_LE((Y - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Project, IsLinear) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix P = rng.normal_matrix(6, 3);
    const Matrix X1 = rng.normal_matrix(6, 9), X2 = rng.normal_matrix(6, 9);
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    const Matrix lhs = project(a * X1 + b * X2, Projection{P}).Y;
    const Matrix rhs = a * project(X1, Projection{P}).Y + b * project(X2, Projection{P}).Y;
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(Project, DimensionMismatch) {
  try {
    project(Matrix::Zero(4, 2), Projection{Matrix::Zero(3, 2)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs |= x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(RngTest, IndexStaysInRange) {
  Rng rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.index(7)];
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(Validate, DatasetInvariants) {
  Dataset ds;
  ds.X = Matrix::Zero(2, 1);
  EXPECT_THROW(validate(ds), Error);  // n < 2
  ds.X = Matrix::Zero(2, 3);
  ds.labels = {1, 2, 3};
  ds.classes = 2;
  EXPECT_THROW(validate(ds), Error);  // label 3 > C
  ds.classes = 3;
  EXPECT_NO_THROW(validate(ds));
}

TEST(Validate, HyperParamRanges) {
  HyperParams p;
  p.k = 2;
  p.c = 2;
  p.d = 2;
  EXPECT_NO_THROW(validate(p, 10, 5));
  p.k = 9;  // > n-2
  EXPECT_THROW(validate(p, 10, 5), Error);
  p.k = 2;
  p.adam.beta1 = 1.0;
  EXPECT_THROW(validate(p, 10, 5), Error);
  p.adam.beta1 = 0.9;
  p.d = 6;
  EXPECT_THROW(validate(p, 10, 5), Error);
}
