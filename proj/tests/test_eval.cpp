#include "clfefa/eval.hpp"
#include "clfefa/ingest.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace clfefa;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

HyperParams blob_params() {
  HyperParams p;
  p.c = 3;
  p.k = 6;
  p.d = 2;
  p.seed = 5;
  return p;
}

}  // namespace

TEST(Knn, ExactMatchAndNearestPrototype) {
  const Matrix train = row({0, 10});
  EXPECT_EQ(knn_predict(train, {1, 2}, row({10, 0, 4, 6})), (Labels{2, 1, 1, 2}));
}

TEST(Knn, TieGoesToLowerIndex) {
  EXPECT_EQ(knn_predict(row({-1, 1}), {2, 1}, row({0})), Labels{2});
  EXPECT_EQ(knn_predict(row({1, -1}), {2, 1}, row({0})), Labels{2});
}

TEST(Knn, MajorityVoteForLargerK) {
  EXPECT_EQ(knn_predict(row({0, 1, 2, 10}), {1, 2, 2, 1}, row({0.9}), 3), Labels{2});
}

TEST(Knn, EmptyTrainingSet) {
  try {
    knn_predict(Matrix(2, 0), {}, Matrix::Zero(2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyTrainingSet);
  }
}

TEST(Knn, MatchesBruteForceLoop) {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const Matrix train = rng.normal_matrix(3, 25), query = rng.normal_matrix(3, 40);
    Labels labels;
    for (int i = 0; i < 25; ++i) labels.push_back(1 + static_cast<int>(rng.index(4)));
    EXPECT_EQ(knn_predict(train, labels, query), oracle::nearest_neighbour(train, labels, query));
  }
}

TEST(Metrics, AccuracyExamples) {
  EXPECT_EQ(accuracy({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_EQ(accuracy({1, 1}, {2, 2}), 0.0);
  EXPECT_EQ(accuracy({1, 1, 2, 2}, {1, 2, 2, 2}), 0.75);
  try {
    accuracy({1}, {1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(Metrics, RecallExamples) {
  EXPECT_EQ(recall_rate({1, 2, 3}, {1, 2, 3}, 3).value, 1.0);
  EXPECT_EQ(recall_rate({1, 1, 2, 2}, {1, 2, 2, 2}, 2).value, 0.75);
  const RecallResult r = recall_rate({1, 1, 1}, {1, 2, 1}, 2);
  EXPECT_EQ(r.unpredicted, std::vector<int>{2});
  EXPECT_DOUBLE_EQ(r.value, (2.0 / 3.0) / 2.0);
}

TEST(Metrics, MatchConfusionMatrixOracle) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const int C = 2 + static_cast<int>(rng.index(6));
    const std::size_t n = 1 + rng.index(50);
    Labels pred, truth;
    for (std::size_t i = 0; i < n; ++i) {
      pred.push_back(1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(C))));
      truth.push_back(1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(C))));
    }
    const oracle::Metrics m = oracle::confusion_metrics(pred, truth, C);
    EXPECT_EQ(accuracy(pred, truth), m.accuracy);
    EXPECT_EQ(recall_rate(pred, truth, C).value, m.recall);
  }
}

TEST(Split, StratifiedAndDisjoint) {
  const Dataset ds = make_blobs(10, 4, 3, 5.0, 1.0, 3);
  Rng rng(4);
  const Split s = stratified_split(ds, 3, rng);
  EXPECT_EQ(s.train.size(), 12u);
  EXPECT_EQ(s.test.size(), 28u);
  std::vector<int> per_class(5, 0);
  for (Index i : s.train) ++per_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
  for (int c = 1; c <= 4; ++c) EXPECT_EQ(per_class[static_cast<std::size_t>(c)], 3);
  std::set<Index> all(s.train.begin(), s.train.end());
  for (Index i : s.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 40u);
}

TEST(Split, WholeClassIsInfeasible) {
  const Dataset ds = make_blobs(6, 3, 3, 5.0, 1.0, 3);
  Rng rng(5);
  try {
    stratified_split(ds, 6, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SplitInfeasible);
  }
}

TEST(Experiment, BlobsSingleRepeat) {
  const Dataset ds = make_blobs(30, 3, 5, 10.0, 0.5, 6);
  SplitSpec split;
  split.repeats = 1;
  split.seed = 7;
  const EvalReport r = run_experiment(ds, SupervisionMode::Unsupervised, blob_params(), split);
  ASSERT_EQ(r.accuracy.size(), 1u);
  EXPECT_GE(r.accuracy[0], 0.95);
  EXPECT_EQ(r.dimension, 2);
}

TEST(Experiment, SameSeedSameReport) {
  const Dataset ds = make_blobs(15, 3, 5, 4.0, 1.0, 8);
  SplitSpec split;
  split.repeats = 3;
  split.seed = 9;
  const EvalReport a = run_experiment(ds, SupervisionMode::Supervised, blob_params(), split);
  const EvalReport b = run_experiment(ds, SupervisionMode::Supervised, blob_params(), split);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.recall, b.recall);
  std::ostringstream ca, cb;
  write_csv(ca, a);
  write_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(Experiment, SemiSupervisedKeepsOnlyLabelledVoters) {
  const Dataset ds = make_blobs(15, 3, 5, 10.0, 0.5, 10);
  SplitSpec split;
  split.repeats = 2;
  split.train_per_class = 8;
  split.labeled_fraction = 0.25;
  const EvalReport r = run_experiment(ds, SupervisionMode::SemiSupervised, blob_params(), split);
  for (double a : r.accuracy) EXPECT_GE(a, 0.9);
}

TEST(Experiment, ReportStatisticsAreConsistent) {
  const Dataset ds = make_blobs(12, 3, 4, 3.0, 1.0, 11);
  SplitSpec split;
  split.repeats = 4;
  split.train_per_class = 4;
  const EvalReport r = run_experiment(ds, SupervisionMode::Supervised, blob_params(), split);
  const auto [am, as] = mean_std(r.accuracy);
  const auto [rm, rs] = mean_std(r.recall);
  EXPECT_NEAR(r.accuracy_mean, am, 1e-12);
  EXPECT_NEAR(r.accuracy_std, as, 1e-12);
  EXPECT_NEAR(r.recall_mean, rm, 1e-12);
  EXPECT_NEAR(r.recall_std, rs, 1e-12);
  for (double v : r.accuracy) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Experiment, InfeasibleSplit) {
  const Dataset ds = make_blobs(6, 3, 3, 5.0, 1.0, 12);
  SplitSpec split;
  split.train_per_class = 6;
  EXPECT_THROW(run_experiment(ds, SupervisionMode::Unsupervised, blob_params(), split), Error);
}

TEST(Serialization, JsonFieldsAndCsvRows) {
  EvalReport r;
  r.accuracy = {0.5, 1.0};
  r.recall = {0.25, 1.0};
  r.components = {3, 2};
  r.converged = {true, false};
  r.unpredicted = {{2}, {}};
  r.dimension = 4;
  finalize(r);
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j["schema"], "clfefa.eval_report");
  EXPECT_EQ(j["repeats"], 2);
  EXPECT_DOUBLE_EQ(j["accuracy_mean"].get<double>(), 0.75);
  std::ostringstream os;
  write_csv(os, r);
  EXPECT_EQ(os.str(),
            "repeat,dimension,accuracy,recall,components,converged\n"
            "0,4,0.5,0.25,3,1\n"
            "1,4,1,1,2,0\n");
}
