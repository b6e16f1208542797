#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "riskforge/config.hpp"
#include "riskforge/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& opts, bool need_out) {
  cmd->add_option("--config", opts.config, "configuration file")->required()->check(CLI::ExistingFile);
  if (need_out) cmd->add_option("--out", opts.out, "run directory (overrides paths.output_dir)");
  cmd->add_option("--seed", opts.seed, "root seed (overrides split.seed)");
}

void report_warnings(const riskforge::Warnings& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << riskforge::to_string(w.code) << ": " << w.message << '\n';
}

riskforge::RunConfig load(const Options& opts, riskforge::Warnings& warnings) {
  riskforge::RunConfig cfg = riskforge::load_config(opts.config, &warnings);
  if (!opts.out.empty()) cfg.output_dir = std::filesystem::absolute(opts.out).lexically_normal();
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskforge: interpretable multimodal mortality-risk pipeline"};
  app.require_subcommand(1);
  Options opts;

  std::vector<std::pair<CLI::App*, riskforge::pipeline::Stage>> stage_cmds;
  for (auto stage : riskforge::pipeline::stages()) {
    auto* cmd = app.add_subcommand(std::string(riskforge::pipeline::to_string(stage)),
                                   "run the " + std::string(riskforge::pipeline::to_string(stage)) + " stage");
    add_common(cmd, opts, true);
    stage_cmds.emplace_back(cmd, stage);
  }
  auto* all = app.add_subcommand("all", "run every stage in order");
  add_common(all, opts, true);
  bool skip_synth = false;
  all->add_flag("--skip-synth", skip_synth, "use existing raw tables instead of generating them");
  auto* validate = app.add_subcommand("validate", "check a configuration file and print it normalized");
  add_common(validate, opts, false);

  CLI11_PARSE(app, argc, argv);

  riskforge::Warnings warnings;
  try {
    riskforge::RunConfig cfg = load(opts, warnings);
    if (validate->parsed()) {
      riskforge::validate_config(cfg);
      std::cout << riskforge::echo_config(cfg);
    } else if (all->parsed()) {
      riskforge::pipeline::run_all(cfg, &warnings, !skip_synth);
    } else {
      for (const auto& [cmd, stage] : stage_cmds) {
        if (cmd->parsed()) riskforge::pipeline::run_stage(stage, cfg, &warnings);
      }
    }
  } catch (const std::exception& e) {
    report_warnings(warnings);
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  report_warnings(warnings);
  return 0;
}
