#include "CLI11.hpp"
#include "speclab/config.hpp"
#include "speclab/pipelines.hpp"

#include <cstdio>
#include <exception>

int main(int argc, char** argv) {
  CLI::App app{"speclab: spectral certificates for discretized Schrodinger operators"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed = 0;
  bool seed_given = false;
  int refine = 0;

  for (const auto& name : speclab::pipeline_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (default: .)");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--refine", refine, "rerun at k grid refinements and report slopes");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = speclab::parse_config_file(config_path);
    const std::string chosen = app.get_subcommands().front()->get_name();
    if (!cfg.pipeline.empty() && cfg.pipeline != chosen)
      throw std::invalid_argument("config: key 'pipeline' (" + cfg.pipeline +
                                  ") conflicts with the subcommand '" + chosen + "'");
    cfg.pipeline = chosen;
    if (seed_given) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const int code = speclab::run_pipeline(cfg, refine);
    if (code != 0) std::fprintf(stderr, "speclab: certificate failure (see report.json)\n");
    return code;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "speclab: input error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "speclab: %s\n", e.what());
    return 1;
  }
}
