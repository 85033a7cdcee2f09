// Evaluation protocol: seeded stratified splits, fit on the training part,
// nearest-neighbour classification in the embedded space, accuracy and the
// per-class "recall rate" (T_c / n_c with n_c the predicted count).
#pragma once

#include "clfefa/core.hpp"
#include "clfefa/trainer.hpp"

#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

namespace clfefa {

/// Majority label among the k nearest training columns (Euclidean). Distance
/// ties go to the lower training index; vote ties go to the label whose best
/// neighbour ranks first.
inline Labels knn_predict(const Matrix& train_Y, const Labels& train_labels,
                          const Matrix& query_Y, int k = 1) {
  const Index m = train_Y.cols();
  require(m >= 1, ErrorKind::EmptyTrainingSet, "no training samples");
  require(static_cast<Index>(train_labels.size()) == m, ErrorKind::LengthMismatch,
          "training labels and samples differ in count");
  require(k >= 1 && k <= m, ErrorKind::InvalidArgument, "k must satisfy 1 <= k <= m");
  require(query_Y.rows() == train_Y.rows() || query_Y.cols() == 0, ErrorKind::DimensionMismatch,
          "query and training embeddings differ in dimension");

  Labels out(static_cast<std::size_t>(query_Y.cols()));
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(m));
  for (Index q = 0; q < query_Y.cols(); ++q) {
    for (Index j = 0; j < m; ++j)
      dist[static_cast<std::size_t>(j)] = {(train_Y.col(j) - query_Y.col(q)).squaredNorm(), j};
    if (k == 1) {
      auto best = dist.front();
      for (const auto& e : dist)
        if (e.first < best.first) best = e;
      out[static_cast<std::size_t>(q)] = train_labels[static_cast<std::size_t>(best.second)];
      continue;
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::map<int, std::pair<int, int>> votes;  // label -> (count, first rank)
    for (int r = 0; r < k; ++r) {
      const int lab = train_labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(r)].second)];
      auto [it, fresh] = votes.try_emplace(lab, 0, r);
      ++it->second.first;
    }
    auto winner = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      const auto& [cnt, rank] = it->second;
      if (cnt > winner->second.first || (cnt == winner->second.first && rank < winner->second.second))
        winner = it;
    }
    out[static_cast<std::size_t>(q)] = winner->first;
  }
  return out;
}

inline double accuracy(const Labels& pred, const Labels& truth) {
  require(pred.size() == truth.size() && !pred.empty(), ErrorKind::LengthMismatch,
          "prediction and truth lengths differ or are empty");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

struct RecallResult {
  double value = 0.0;
  std::vector<int> unpredicted;  // classes with n_c = 0, each contributed 0
};

/// (1/C) sum_c T_c / n_c with T_c the correct predictions of class c and n_c
/// the number of samples predicted as c. Note that this is macro precision
/// under the usual naming; the field keeps the protocol's name.
inline RecallResult recall_rate(const Labels& pred, const Labels& truth, int C) {
  require(pred.size() == truth.size() && !pred.empty(), ErrorKind::LengthMismatch,
          "prediction and truth lengths differ or are empty");
  require(C >= 1, ErrorKind::InvalidArgument, "C must be positive");
  std::vector<long> hits(static_cast<std::size_t>(C) + 1, 0), predicted(static_cast<std::size_t>(C) + 1, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    require(pred[i] >= 1 && pred[i] <= C && truth[i] >= 1 && truth[i] <= C,
            ErrorKind::InvalidArgument, "label outside 1..C");
    ++predicted[static_cast<std::size_t>(pred[i])];
    if (pred[i] == truth[i]) ++hits[static_cast<std::size_t>(pred[i])];
  }
  RecallResult r;
  double acc = 0.0;
  for (int c = 1; c <= C; ++c) {
    if (predicted[static_cast<std::size_t>(c)] == 0) {
      r.unpredicted.push_back(c);
      continue;
    }
    acc += static_cast<double>(hits[static_cast<std::size_t>(c)]) /
           static_cast<double>(predicted[static_cast<std::size_t>(c)]);
  }
  r.value = acc / C;
  return r;
}

struct SplitSpec {
  int train_per_class = 6;
  int repeats = 5;
  std::uint64_t seed = 0;
  /// Semi-supervised only: share of each class's training samples that keep
  /// their label.
  double labeled_fraction = 0.5;
};

struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Draws train_per_class samples of every class for training; the rest is test.
/// Both index lists come out in ascending order.
inline Split stratified_split(const Dataset& ds, int train_per_class, Rng& rng) {
  require(ds.has_labels() && ds.labeled_count() == ds.size(), ErrorKind::SplitInfeasible,
          "stratified split needs every sample labeled");
  require(train_per_class >= 1, ErrorKind::SplitInfeasible, "train_per_class must be >= 1");
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.classes) + 1);
  for (Index i = 0; i < ds.size(); ++i)
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);

  Split s;
  for (int c = 1; c <= ds.classes; ++c) {
    auto members = by_class[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    require(static_cast<int>(members.size()) > train_per_class, ErrorKind::SplitInfeasible,
            "class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                " samples; needs more than " + std::to_string(train_per_class));
    rng.shuffle(members);
    s.train.insert(s.train.end(), members.begin(), members.begin() + train_per_class);
    s.test.insert(s.test.end(), members.begin() + train_per_class, members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct EvalReport {
  std::vector<double> accuracy;
  std::vector<double> recall;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double recall_mean = 0.0, recall_std = 0.0;
  int dimension = 0;
  std::vector<std::vector<int>> unpredicted;  // per repeat
  std::vector<int> components;                // per repeat, final graph components
  std::vector<bool> converged;                // per repeat
};

inline void finalize(EvalReport& r) {
  std::tie(r.accuracy_mean, r.accuracy_std) = mean_std(r.accuracy);
  std::tie(r.recall_mean, r.recall_std) = mean_std(r.recall);
}

inline EvalReport run_experiment(const Dataset& ds, SupervisionMode mode, const HyperParams& params,
                                 const SplitSpec& split) {
  require(split.repeats >= 1, ErrorKind::SplitInfeasible, "repeats must be >= 1");
  EvalReport rep;
  rep.dimension = params.d;
  for (int r = 0; r < split.repeats; ++r) {
    Rng rng(derive_seed(split.seed, static_cast<std::uint64_t>(r)));
    const Split sp = stratified_split(ds, split.train_per_class, rng);
    Dataset train = select_columns(ds, sp.train);
    const Dataset test = select_columns(ds, sp.test);

    if (mode == SupervisionMode::SemiSupervised) {
      // keep the first `keep` (in shuffled order) labeled per class
      const int keep = std::clamp(
          static_cast<int>(std::lround(split.labeled_fraction * split.train_per_class)), 1,
          split.train_per_class);
      require(keep < split.train_per_class, ErrorKind::SplitInfeasible,
              "semi-supervised split leaves no unlabeled training sample");
      std::vector<Index> order(static_cast<std::size_t>(train.size()));
      std::iota(order.begin(), order.end(), Index{0});
      rng.shuffle(order);
      std::vector<int> kept(static_cast<std::size_t>(ds.classes) + 1, 0);
      for (Index i : order) {
        int& lab = train.labels[static_cast<std::size_t>(i)];
        if (kept[static_cast<std::size_t>(lab)] < keep) ++kept[static_cast<std::size_t>(lab)];
        else lab = kUnlabeled;
      }
    }

    HyperParams p = params;
    p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(r));
    const FitReport fr = fit(train, mode, p);

    const Matrix train_Y = project(train.X, fr.projection).Y;
    const Matrix test_Y = project(test.X, fr.projection).Y;

    // only labeled training samples vote
    std::vector<Index> voters;
    for (Index i = 0; i < train.size(); ++i)
      if (train.is_labeled(i)) voters.push_back(i);
    Matrix voter_Y(train_Y.rows(), static_cast<Index>(voters.size()));
    Labels voter_labels;
    for (std::size_t v = 0; v < voters.size(); ++v) {
      voter_Y.col(static_cast<Index>(v)) = train_Y.col(voters[v]);
      voter_labels.push_back(train.labels[static_cast<std::size_t>(voters[v])]);
    }

    const Labels pred = knn_predict(voter_Y, voter_labels, test_Y, 1);
    rep.accuracy.push_back(accuracy(pred, test.labels));
    RecallResult rr = recall_rate(pred, test.labels, ds.classes);
    rep.recall.push_back(rr.value);
    rep.unpredicted.push_back(std::move(rr.unpredicted));
    rep.components.push_back(fr.components);
    rep.converged.push_back(fr.converged);
  }
  finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["schema"] = "clfefa.eval_report";
  j["version"] = kReportSchemaVersion;
  j["dimension"] = r.dimension;
  j["repeats"] = r.accuracy.size();
  j["accuracy"] = r.accuracy;
  j["recall"] = r.recall;
  j["accuracy_mean"] = r.accuracy_mean;
  j["accuracy_std"] = r.accuracy_std;
  j["recall_mean"] = r.recall_mean;
  j["recall_std"] = r.recall_std;
  j["unpredicted_classes"] = r.unpredicted;
  j["components"] = r.components;
  j["converged"] = r.converged;
  return j;
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_csv(std::ostream& os, const EvalReport& r) {
  os << "repeat,dimension,accuracy,recall,components,converged\n";
  for (std::size_t i = 0; i < r.accuracy.size(); ++i)
    os << i << ',' << r.dimension << ',' << format_real(r.accuracy[i]) << ','
       << format_real(r.recall[i]) << ',' << r.components[i] << ','
       << (r.converged[i] ? 1 : 0) << '\n';
}

}  // namespace clfefa
