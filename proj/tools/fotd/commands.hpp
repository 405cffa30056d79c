#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace fotd_cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolver = 1;
inline constexpr int kExitConfig = 2;

/// Command-line settings that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out;
  std::vector<Mode> modes;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<bool> assert_on;
  bool diagnostics = false;

  void apply(ExperimentConfig &c) const;
};

struct SweepLists {
  std::vector<int> b;
  std::vector<double> mu;
};

struct DiagOptions {
  double gamma_c = 1.0;
  double t = 1.0;
  double upsilon = 2.0;
};

int cmd_solve(const std::string &config_path, const Overrides &o, std::ostream &out,
              std::ostream &err);
int cmd_sweep(const std::string &config_path, const Overrides &o, const SweepLists &lists,
              std::ostream &out, std::ostream &err);
int cmd_diag(const std::string &config_path, const Overrides &o, const DiagOptions &d,
             std::ostream &out, std::ostream &err);

/// Least-squares slope of log(ratio) against b.
double log_slope(const std::vector<int> &b, const std::vector<double> &ratio);

} // namespace fotd_cli
