// imgspace: run data-centric training experiments from a JSON config.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "imgspace/errors.hpp"
#include "imgspace/runner.hpp"
#include "json.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  bool quiet = false;
};

void add_common(CLI::App* sub, Overrides& o, bool config_required) {
  auto* c = sub->add_option("--config", o.config, "experiment config (JSON)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "output directory (overrides config.output)");
  sub->add_option("--seed", o.seed, "base seed override");
  sub->add_option("--runs", o.runs, "run count override")->check(CLI::PositiveNumber);
  sub->add_option("--data-dir", o.data_dir, "CIFAR-10 directory (else config or $DATA_DIR)");
  sub->add_flag("-q,--quiet", o.quiet, "no progress output");
}

int run(imgspace::runner::ExperimentKind kind, const Overrides& o) {
  using namespace imgspace::runner;
  ExperimentConfig cfg = load_config(o.config, kind);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.runs) cfg.runs = *o.runs;
  cfg.validate();

  RunOptions opts;
  opts.data_dir = o.data_dir;
  opts.log = o.quiet ? nullptr : &std::cerr;
  ExperimentResult result = run_experiment(cfg, opts);
  (void)result;
  std::cout << render_report(cfg.output);
  return 0;
}

int report(const Overrides& o) {
  using namespace imgspace::runner;
  std::filesystem::path dir = o.out;
  if (dir.empty()) {
    if (o.config.empty()) throw imgspace::ConfigError("report needs --out or --config");
    // Any kind accepts the common fields; take the kind from the file if set.
    std::ifstream in(o.config);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    std::string kind = doc.is_object() && doc.contains("kind") && doc["kind"].is_string()
                           ? doc["kind"].get<std::string>()
                           : "train";
    dir = load_config(o.config, kind_from_string(kind)).output;
  }
  std::cout << render_report(dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using imgspace::runner::ExperimentKind;
  CLI::App app{"Data-centric training experiments on small image classifiers"};
  app.name("imgspace");

  const std::pair<ExperimentKind, const char*> kinds[] = {
      {ExperimentKind::baseline, "train one network per run on the full training set"},
      {ExperimentKind::subgroup, "retrain on confidence/illusiveness subgroups"},
      {ExperimentKind::noise_sweep, "add a random-noise category under several settings"},
      {ExperimentKind::exclude_illusive, "compare overfitting with illusive samples removed"},
      {ExperimentKind::adv_eval, "FGSM accuracy with and without illusive samples"},
      {ExperimentKind::relabel_glue, "relabel confused illusive samples and glue predictions"},
      {ExperimentKind::step_demo, "fit a 1-D step function from two sampling schemes"},
  };
  Overrides o;
  std::optional<ExperimentKind> chosen;
  std::vector<std::pair<CLI::App*, ExperimentKind>> subs;
  for (const auto& [kind, help] : kinds) {
    CLI::App* sub = app.add_subcommand(imgspace::runner::to_string(kind), help);
    add_common(sub, o, true);
    subs.emplace_back(sub, kind);
  }
  CLI::App* report_cmd = app.add_subcommand("report", "print the tables of an output directory");
  add_common(report_cmd, o, false);
  app.require_subcommand(1);

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (report_cmd->parsed()) return report(o);
    for (const auto& [sub, kind] : subs)
      if (sub->parsed()) return run(kind, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
