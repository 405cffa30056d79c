#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_common(CLI::App *cmd, std::string &config, fotd_cli::Overrides &o,
                std::vector<std::string> &modes, std::string &assert_level) {
  cmd->add_option("--config", config, "Experiment config (JSON)")->required();
  cmd->add_option_function<std::string>(
      "--out", [&o](const std::string &v) { o.out = v; }, "Output directory");
  cmd->add_option("--mode", modes, "fotd, centralized or schwarz (repeatable)")
      ->check(CLI::IsMember({"fotd", "centralized", "schwarz"}));
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&o](std::uint64_t v) { o.seed = v; }, "Initialization seed");
  cmd->add_option_function<int>(
      "--workers", [&o](int v) { o.workers = v; }, "Threads for subproblem solves");
  cmd->add_option("--assert-level", assert_level, "Descent assertion")
      ->check(CLI::IsMember({"off", "on"}));
  cmd->add_flag("--diagnostics", o.diagnostics, "Record direction-error ratios");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Overlapping temporal decomposition SQP solver"};
  app.require_subcommand(1);

  std::string config, assert_level;
  std::vector<std::string> modes;
  fotd_cli::Overrides o;
  fotd_cli::SweepLists lists;
  fotd_cli::DiagOptions diag;

  auto *solve = app.add_subcommand("solve", "Solve from every initialization");
  add_common(solve, config, o, modes, assert_level);

  auto *sweep = app.add_subcommand("sweep", "Grid over overlap b and penalty mu");
  add_common(sweep, config, o, modes, assert_level);
  sweep->add_option("--b", lists.b, "Overlap sizes")->delimiter(',');
  sweep->add_option("--mu", lists.mu, "Penalties")->delimiter(',');

  auto *dg = app.add_subcommand("diag", "Theory constants and equivalence/decay checks");
  add_common(dg, config, o, modes, assert_level);
  dg->add_option("--gamma-c", diag.gamma_c, "Controllability lower bound");
  dg->add_option("--t", diag.t, "Controllability horizon");
  dg->add_option("--upsilon", diag.upsilon, "Upper bound constant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fotd_cli::kExitConfig;
  }

  try {
    for (const auto &m : modes) o.modes.push_back(fotd_cli::parse_mode(m));
  } catch (const fotd_cli::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fotd_cli::kExitConfig;
  }
  if (!assert_level.empty()) o.assert_on = assert_level == "on";

  if (solve->parsed()) return fotd_cli::cmd_solve(config, o, std::cout, std::cerr);
  if (sweep->parsed()) return fotd_cli::cmd_sweep(config, o, lists, std::cout, std::cerr);
  return fotd_cli::cmd_diag(config, o, diag, std::cout, std::cerr);
}
