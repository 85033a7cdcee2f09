// Run configuration and the fit / evaluate / grid / transform commands behind
// the clfefa executable. Kept in the library so tests can drive them directly.
#pragma once

#include "clfefa/core.hpp"
#include "clfefa/eval.hpp"
#include "clfefa/graph.hpp"
#include "clfefa/ingest.hpp"
#include "clfefa/model_io.hpp"
#include "clfefa/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace clfefa {

enum class SourceKind { Blobs, Idx, Csv };

struct RunConfig {
  SourceKind source = SourceKind::Blobs;
  // blobs
  int blobs_per_class = 30;
  int blobs_classes = 3;
  int blobs_dim = 5;
  double blobs_separation = 10.0;
  double blobs_noise = 0.5;
  // idx
  std::string idx_images;
  std::string idx_labels;
  Index idx_keep = 2000;
  int idx_side = 16;
  // csv
  std::string csv_path;
  std::string csv_label_column;
  std::optional<std::uint64_t> data_seed;

  std::optional<NormalizeScheme> normalize;  // unset: unit_range for idx, zscore otherwise
  SupervisionMode mode = SupervisionMode::Unsupervised;
  HyperParams params;
  SplitSpec split;
  std::optional<std::uint64_t> split_seed;

  std::vector<double> grid_sigma;
  std::vector<double> grid_lambda;
  std::vector<int> grid_k;
  std::vector<int> grid_d;

  std::string out = "out";
  bool dump_similarity = false;

  std::string text;  // the config file as read

  std::uint64_t effective_data_seed() const { return data_seed.value_or(derive_seed(params.seed, 101)); }
  std::uint64_t effective_split_seed() const { return split_seed.value_or(derive_seed(params.seed, 202)); }
  NormalizeScheme effective_normalize() const {
    if (normalize) return *normalize;
    return source == SourceKind::Idx ? NormalizeScheme::UnitRange : NormalizeScheme::ZScore;
  }
};

namespace detail {

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, Parse parse) {
  std::vector<T> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<T>(parse(key, item)));
  }
  if (out.empty()) throw Error(ErrorKind::ConfigError, "key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are errors.
inline RunConfig parse_config(const std::string& text) {
  using namespace detail;
  RunConfig cfg;
  cfg.text = text;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));

    if (apply_hyperparam(cfg.params, key, v)) continue;
    if (key == "source") {
      if (v == "blobs") cfg.source = SourceKind::Blobs;
      else if (v == "idx") cfg.source = SourceKind::Idx;
      else if (v == "csv") cfg.source = SourceKind::Csv;
      else throw Error(ErrorKind::ConfigError, "key 'source': unknown source '" + v + "'");
    } else if (key == "blobs.n_per_class") cfg.blobs_per_class = static_cast<int>(parse_int(key, v));
    else if (key == "blobs.classes") cfg.blobs_classes = static_cast<int>(parse_int(key, v));
    else if (key == "blobs.dim") cfg.blobs_dim = static_cast<int>(parse_int(key, v));
    else if (key == "blobs.separation") cfg.blobs_separation = parse_double(key, v);
    else if (key == "blobs.noise") cfg.blobs_noise = parse_double(key, v);
    else if (key == "idx.images") cfg.idx_images = v;
    else if (key == "idx.labels") cfg.idx_labels = v;
    else if (key == "idx.n_keep") cfg.idx_keep = static_cast<Index>(parse_int(key, v));
    else if (key == "idx.side") cfg.idx_side = static_cast<int>(parse_int(key, v));
    else if (key == "csv.path") cfg.csv_path = v;
    else if (key == "csv.label_column") cfg.csv_label_column = v;
    else if (key == "data.seed") cfg.data_seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "normalize") cfg.normalize = parse_normalize(v);
    else if (key == "mode") cfg.mode = parse_mode(v);
    else if (key == "split.train_per_class") cfg.split.train_per_class = static_cast<int>(parse_int(key, v));
    else if (key == "split.repeats") cfg.split.repeats = static_cast<int>(parse_int(key, v));
    else if (key == "split.seed") cfg.split_seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "split.labeled_fraction") cfg.split.labeled_fraction = parse_double(key, v);
    else if (key == "grid.sigma") cfg.grid_sigma = parse_list<double>(key, v, parse_double);
    else if (key == "grid.lambda") cfg.grid_lambda = parse_list<double>(key, v, parse_double);
    else if (key == "grid.k") cfg.grid_k = parse_list<int>(key, v, parse_int);
    else if (key == "grid.d") cfg.grid_d = parse_list<int>(key, v, parse_int);
    else if (key == "out") cfg.out = v;
    else if (key == "dump_similarity") cfg.dump_similarity = parse_bool(key, v);
    else throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

/// Loads and normalizes the configured dataset.
inline Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds;
  switch (cfg.source) {
    case SourceKind::Blobs:
      ds = make_blobs(cfg.blobs_per_class, cfg.blobs_classes, cfg.blobs_dim, cfg.blobs_separation,
                      cfg.blobs_noise, cfg.effective_data_seed());
      break;
    case SourceKind::Idx: {
      if (cfg.idx_images.empty() || cfg.idx_labels.empty())
        throw Error(ErrorKind::ConfigError, "idx source needs idx.images and idx.labels");
      const Dataset raw = load_idx(cfg.idx_images, cfg.idx_labels);
      ds = subsample_and_rescale(raw, std::min(cfg.idx_keep, raw.size()), cfg.idx_side,
                                 cfg.effective_data_seed());
      break;
    }
    case SourceKind::Csv:
      if (cfg.csv_path.empty()) throw Error(ErrorKind::ConfigError, "csv source needs csv.path");
      ds = load_csv(cfg.csv_path, cfg.csv_label_column.empty()
                                      ? std::nullopt
                                      : std::optional<std::string>(cfg.csv_label_column));
      break;
  }
  validate(ds);
  return normalize(ds, cfg.effective_normalize());
}

/// Exit code per error family.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
      return 2;
    case ErrorKind::IoError:
    case ErrorKind::BadMagic:
    case ErrorKind::TruncatedPayload:
    case ErrorKind::CountMismatch:
    case ErrorKind::RaggedRows:
    case ErrorKind::NonNumericCell:
    case ErrorKind::MissingColumn:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::SubsampleTooLarge:
      return 3;
    case ErrorKind::DimensionMismatch:
    case ErrorKind::LengthMismatch:
      return 4;
    case ErrorKind::ModeLabelMismatch:
    case ErrorKind::SplitInfeasible:
    case ErrorKind::EmptyTrainingSet:
    case ErrorKind::InvalidArgument:
      return 5;
    case ErrorKind::NonFiniteIntermediate:
    case ErrorKind::InsufficientNeighbors:
    case ErrorKind::DegenerateRow:
    case ErrorKind::EigenFailure:
    case ErrorKind::NonFinite:
      return 6;
  }
  return 1;
}

namespace detail {

namespace fs = std::filesystem;

inline fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + cfg.out + ": " + ec.message());
  std::ofstream echo(dir / "config.txt");
  echo << cfg.text;
  std::ofstream resolved(dir / "resolved_params.txt");
  resolved << hyperparams_to_text(cfg.params) << "mode=" << to_string(cfg.mode) << '\n'
           << "normalize=" << to_string(cfg.effective_normalize()) << '\n'
           << "data.seed=" << cfg.effective_data_seed() << '\n'
           << "split.seed=" << cfg.effective_split_seed() << '\n';
  return dir;
}

inline void write_text(const fs::path& path, const std::string& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  os << s;
}

inline void write_embedding_csv(std::ostream& os, const Matrix& Y, Index d) {
  os.precision(17);
  for (Index r = 0; r < d; ++r) os << (r ? "," : "") << 'y' << r;
  os << '\n';
  for (Index i = 0; i < Y.cols(); ++i) {
    for (Index r = 0; r < d; ++r) os << (r ? "," : "") << Y(r, i);
    os << '\n';
  }
}

inline nlohmann::json fit_json(const FitReport& fr, const HyperParams& p) {
  nlohmann::json j;
  j["schema"] = "clfefa.fit_report";
  j["version"] = kReportSchemaVersion;
  j["D"] = fr.projection.P.rows();
  j["d"] = fr.projection.P.cols();
  j["loss_trace"] = fr.loss_trace;
  j["inner_steps"] = fr.inner_steps;
  j["total_adam_steps"] = fr.total_adam_steps;
  j["components"] = fr.components;
  j["target_components"] = p.c;
  j["converged"] = fr.converged;
  j["lambda_used"] = fr.lambda_used;
  j["gamma"] = fr.similarity.gamma;
  j["final_loss"] = {{"contrastive", fr.final_loss.contrastive},
                     {"frobenius", fr.final_loss.frobenius},
                     {"frobenius_global", fr.final_loss.frobenius_global},
                     {"spectral", fr.final_loss.spectral},
                     {"total", fr.final_loss.total}};
  j["wallclock_seconds"] = fr.wallclock;
  return j;
}

}  // namespace detail

inline HyperParams effective_params(const RunConfig& cfg) {
  HyperParams p = cfg.params;
  if (cfg.mode == SupervisionMode::Supervised) p.lambda = 0.0;
  return p;
}

/// Fits on the whole configured dataset. Writes model.bin, fit_report.json,
/// loss_trace.csv and fit_embedding.csv (plus similarity.coo when asked).
inline FitReport cmd_fit(const RunConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset ds = load_dataset(cfg);
  const HyperParams p = effective_params(cfg);
  FitReport fr = fit(ds, cfg.mode, p);

  save_model((dir / "model.bin").string(), Model{fr.projection, p});
  detail::write_text(dir / "fit_report.json", detail::fit_json(fr, p).dump(2) + "\n");

  std::ostringstream trace;
  trace << "iteration,loss,inner_steps\n";
  for (std::size_t t = 0; t < fr.loss_trace.size(); ++t)
    trace << t << ',' << format_real(fr.loss_trace[t]) << ',' << fr.inner_steps[t] << '\n';
  detail::write_text(dir / "loss_trace.csv", trace.str());

  std::ostringstream emb;
  detail::write_embedding_csv(emb, project(ds.X, fr.projection).Y, fr.projection.P.cols());
  detail::write_text(dir / "fit_embedding.csv", emb.str());

  if (cfg.dump_similarity) {
    std::ostringstream coo;
    write_coo(coo, fr.similarity.S);
    detail::write_text(dir / "similarity.coo", coo.str());
  }
  return fr;
}

inline SplitSpec effective_split(const RunConfig& cfg) {
  SplitSpec s = cfg.split;
  s.seed = cfg.effective_split_seed();
  return s;
}

/// Runs the repeated-split protocol; writes eval_report.json and eval_report.csv.
inline EvalReport cmd_evaluate(const RunConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset ds = load_dataset(cfg);
  EvalReport rep = run_experiment(ds, cfg.mode, effective_params(cfg), effective_split(cfg));
  detail::write_text(dir / "eval_report.json", to_json(rep).dump(2) + "\n");
  std::ostringstream csv;
  write_csv(csv, rep);
  detail::write_text(dir / "eval_report.csv", csv.str());
  return rep;
}

struct GridCell {
  double sigma = 0.0;
  double lambda = 0.0;
  int k = 0;
  int d = 0;
  EvalReport report;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  std::vector<std::string> warnings;
};

/// Cartesian sweep over sigma x lambda x k x d. Cell i fits with seed
/// base + i; splits are shared by all cells. The best cell has the highest
/// mean accuracy (first wins ties). Writes grid_results.csv, grid_best_d.csv
/// and grid_report.json.
inline GridResult cmd_grid(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset ds = load_dataset(cfg);

  GridResult res;
  auto sig = cfg.grid_sigma.empty() ? std::vector<double>{cfg.params.sigma} : cfg.grid_sigma;
  auto lam = cfg.grid_lambda.empty() ? std::vector<double>{cfg.params.lambda} : cfg.grid_lambda;
  auto ks = cfg.grid_k.empty() ? std::vector<int>{cfg.params.k} : cfg.grid_k;
  auto ds_ = cfg.grid_d.empty() ? std::vector<int>{cfg.params.d} : cfg.grid_d;
  if (cfg.mode == SupervisionMode::Supervised &&
      (lam.size() != 1 || lam.front() != 0.0)) {
    res.warnings.push_back("supervised mode: lambda grid replaced by {0}");
    log << "warning: " << res.warnings.back() << '\n';
    lam = {0.0};
  }

  const SplitSpec split = effective_split(cfg);
  std::uint64_t cell = 0;
  for (double s : sig)
    for (double l : lam)
      for (int k : ks)
        for (int d : ds_) {
          HyperParams p = effective_params(cfg);
          p.sigma = s;
          p.lambda = l;
          p.k = k;
          p.d = d;
          p.seed = cfg.params.seed + cell;
          GridCell gc{s, l, k, d, run_experiment(ds, cfg.mode, p, split)};
          log << "cell " << cell << " sigma=" << s << " lambda=" << l << " k=" << k << " d=" << d
              << " acc=" << gc.report.accuracy_mean << '\n';
          res.cells.push_back(std::move(gc));
          ++cell;
        }
  for (std::size_t i = 1; i < res.cells.size(); ++i)
    if (res.cells[i].report.accuracy_mean > res.cells[res.best].report.accuracy_mean) res.best = i;

  std::ostringstream csv;
  csv << "cell,sigma,lambda,k,d,accuracy_mean,accuracy_std,recall_mean,recall_std,best\n";
  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    const auto& c = res.cells[i];
    csv << i << ',' << format_real(c.sigma) << ',' << format_real(c.lambda) << ',' << c.k << ','
        << c.d << ',' << format_real(c.report.accuracy_mean) << ','
        << format_real(c.report.accuracy_std) << ',' << format_real(c.report.recall_mean) << ','
        << format_real(c.report.recall_std) << ',' << (i == res.best ? 1 : 0) << '\n';
  }
  detail::write_text(dir / "grid_results.csv", csv.str());

  // best d for every (sigma, lambda, k)
  std::ostringstream best_d;
  best_d << "sigma,lambda,k,best_d,accuracy_mean,accuracy_std,recall_mean,recall_std\n";
  for (std::size_t i = 0; i < res.cells.size(); i += ds_.size()) {
    std::size_t b = i;
    for (std::size_t j = i; j < i + ds_.size(); ++j)
      if (res.cells[j].report.accuracy_mean > res.cells[b].report.accuracy_mean) b = j;
    const auto& c = res.cells[b];
    best_d << format_real(c.sigma) << ',' << format_real(c.lambda) << ',' << c.k << ',' << c.d << ','
           << format_real(c.report.accuracy_mean) << ',' << format_real(c.report.accuracy_std) << ','
           << format_real(c.report.recall_mean) << ',' << format_real(c.report.recall_std) << '\n';
  }
  detail::write_text(dir / "grid_best_d.csv", best_d.str());

  nlohmann::json j;
  j["schema"] = "clfefa.grid_report";
  j["version"] = kReportSchemaVersion;
  j["best_cell"] = res.best;
  j["warnings"] = res.warnings;
  for (const auto& c : res.cells)
    j["cells"].push_back({{"sigma", c.sigma}, {"lambda", c.lambda}, {"k", c.k}, {"d", c.d},
                          {"report", to_json(c.report)}});
  detail::write_text(dir / "grid_report.json", j.dump(2) + "\n");
  return res;
}

/// Projects the samples of a CSV file (rows = samples; a column named
/// "label" is ignored) with a saved model and writes embedding.csv.
inline Matrix cmd_transform(const std::string& model_path, const std::string& data_path,
                            const std::string& out_dir) {
  const Model model = load_model(model_path);
  std::optional<std::string> label_col;
  {
    std::ifstream is(data_path);
    if (!is) throw Error(ErrorKind::IoError, "cannot open " + data_path);
    std::string header;
    std::getline(is, header);
    const auto cells = detail::split_csv_line(header);
    if (std::find(cells.begin(), cells.end(), "label") != cells.end()) label_col = "label";
  }
  const Dataset ds = load_csv(data_path, label_col);
  require(ds.X.allFinite(), ErrorKind::NonFiniteInput, "data contains NaN or Inf");
  const Matrix Y = project(ds.X, model.projection).Y;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ostringstream os;
  detail::write_embedding_csv(os, Y, model.projection.P.cols());
  detail::write_text(std::filesystem::path(out_dir) / "embedding.csv", os.str());
  return Y;
}

}  // namespace clfefa
