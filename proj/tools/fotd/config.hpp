#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fotd/fotd.h"

namespace fotd_cli {

/// Raised for unreadable or malformed configuration; the message names the
/// offending key.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Mode { fotd, centralized, schwarz };

const char *mode_name(Mode m);
Mode parse_mode(const std::string &s);
int mode_code(Mode m);

struct ProblemConfig {
  std::string type = "toy"; ///< "toy" or "plate"
  std::optional<int> toy_case;
  fotd_toy_spec toy{};
  fotd_plate_spec plate{};
};

struct RunConfig {
  int inits = 5;
  std::uint64_t seed = 42;
  std::string out = "fotd_out";
  bool timing = true;
};

struct ExperimentConfig {
  ProblemConfig problem;
  std::vector<Mode> modes{Mode::fotd};
  fotd_config solver{}; ///< diagnostics and assert_level come from the run block
  bool max_iters_explicit = false;
  RunConfig run;

  ExperimentConfig();
  /// Solver settings for `mode`; Schwarz defaults to a 30-iteration budget.
  fotd_config solver_for(Mode mode) const;
};

ExperimentConfig parse_config(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);
nlohmann::json emit_config(const ExperimentConfig &c);

bool operator==(const ExperimentConfig &a, const ExperimentConfig &b);

} // namespace fotd_cli
