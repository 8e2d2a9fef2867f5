#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rog/bench/pipeline.hpp"
#include "rog/core/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;

int exit_code(const rog::Error& e) {
  switch (e.kind()) {
    case rog::ErrorKind::kInvalidConfig: return kExitConfig;
    case rog::ErrorKind::kNotFound:
    case rog::ErrorKind::kCoverage:
    case rog::ErrorKind::kMissingReference: return kExitMissing;
    default: return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robustness benchmark for volumetric segmentation"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  bool quiet = false;
  for (const char* name : {"preprocess", "train", "train-free", "attack", "sweep", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("-q,--quiet", quiet, "suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    rog::bench::RunContext ctx;
    ctx.config = rog::bench::load_experiment_config(config_path);
    ctx.out = out_dir;
    ctx.deterministic = rog::bench::deterministic_requested();
    ctx.log = quiet ? nullptr : &std::cerr;
    const auto mode = rog::bench::mode_from_string(app.get_subcommands().front()->get_name());
    rog::bench::run_mode(mode, ctx);
  } catch (const rog::Error& e) {
    std::cerr << "rogbench: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "rogbench: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
