// clfefa: fit | evaluate | grid | transform
#include "clfefa/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Contrastive linear feature extraction with an adaptive similarity graph"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config's out key)");
    sub->add_option("--seed", seed, "seed override");
  };
  auto* fit = app.add_subcommand("fit", "fit a projection on the whole dataset");
  add_common(fit);
  auto* evaluate = app.add_subcommand("evaluate", "repeated split evaluation with 1-NN");
  add_common(evaluate);
  auto* grid = app.add_subcommand("grid", "grid search over sigma, lambda, k and d");
  add_common(grid);

  std::string model_path, data_path;
  auto* transform = app.add_subcommand("transform", "project a CSV with a saved model");
  transform->add_option("--model", model_path, "model.bin from fit")->required();
  transform->add_option("--data", data_path, "CSV with samples as rows")->required();
  transform->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (transform->parsed()) {
      clfefa::cmd_transform(model_path, data_path, out_dir);
      return 0;
    }
    clfefa::RunConfig cfg = clfefa::load_config(config_path);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (seed) {
      cfg.params.seed = *seed;
      cfg.text += "\n# --seed " + std::to_string(*seed) + "\n";
    }
    if (fit->parsed()) {
      const auto fr = clfefa::cmd_fit(cfg);
      std::cout << "fit: " << fr.loss_trace.size() << " outer iterations, components "
                << fr.components << (fr.converged ? ", converged" : ", not converged") << '\n';
    } else if (evaluate->parsed()) {
      const auto rep = clfefa::cmd_evaluate(cfg);
      std::cout << "accuracy " << rep.accuracy_mean << " +- " << rep.accuracy_std << ", recall "
                << rep.recall_mean << " +- " << rep.recall_std << '\n';
    } else if (grid->parsed()) {
      const auto res = clfefa::cmd_grid(cfg);
      const auto& b = res.cells[res.best];
      std::cout << "best cell " << res.best << ": sigma=" << b.sigma << " lambda=" << b.lambda
                << " k=" << b.k << " d=" << b.d << " accuracy " << b.report.accuracy_mean << '\n';
    }
  } catch (const clfefa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return clfefa::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
