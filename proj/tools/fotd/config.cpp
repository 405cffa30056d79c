#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

namespace fotd_cli {

using nlohmann::json;

const char *mode_name(Mode m) {
  switch (m) {
  case Mode::fotd: return "fotd";
  case Mode::centralized: return "centralized";
  case Mode::schwarz: return "schwarz";
  }
  return "fotd";
}

Mode parse_mode(const std::string &s) {
  if (s == "fotd") return Mode::fotd;
  if (s == "centralized") return Mode::centralized;
  if (s == "schwarz") return Mode::schwarz;
  throw ConfigError("solver.mode: unknown mode '" + s + "' (fotd, centralized, schwarz)");
}

int mode_code(Mode m) {
  switch (m) {
  case Mode::fotd: return FOTD_MODE_FOTD;
  case Mode::centralized: return FOTD_MODE_CENTRALIZED;
  case Mode::schwarz: return FOTD_MODE_SCHWARZ;
  }
  return FOTD_MODE_FOTD;
}

ExperimentConfig::ExperimentConfig() {
  fotd_toy_case(1, 500, &problem.toy);
  fotd_plate_spec_default(&problem.plate);
  fotd_config_default(&solver);
}

fotd_config ExperimentConfig::solver_for(Mode mode) const {
  fotd_config c = solver;
  if (mode == Mode::schwarz && !max_iters_explicit) c.max_iters = 30;
  return c;
}

namespace {

void check_keys(const json &obj, const std::string &path,
                std::initializer_list<const char *> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto &item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char *k) { return item.key() == k; });
    if (!known) throw ConfigError("unknown key '" + path + "." + item.key() + "'");
  }
}

std::string where(const std::string &path, const char *key) { return path + "." + key; }

template <class T> bool read(const json &obj, const std::string &path, const char *key, T &out);

template <> bool read(const json &obj, const std::string &path, const char *key, double &out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_number()) throw ConfigError(where(path, key) + ": expected a number");
  out = obj[key].get<double>();
  return true;
}

template <> bool read(const json &obj, const std::string &path, const char *key, int &out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_number_integer()) throw ConfigError(where(path, key) + ": expected an integer");
  out = obj[key].get<int>();
  return true;
}

template <>
bool read(const json &obj, const std::string &path, const char *key, std::uint64_t &out) {
  if (!obj.contains(key)) return false;
  const auto &v = obj[key];
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(where(path, key) + ": expected a nonnegative integer");
  out = obj[key].get<std::uint64_t>();
  return true;
}

template <> bool read(const json &obj, const std::string &path, const char *key, bool &out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_boolean()) throw ConfigError(where(path, key) + ": expected true or false");
  out = obj[key].get<bool>();
  return true;
}

template <>
bool read(const json &obj, const std::string &path, const char *key, std::string &out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_string()) throw ConfigError(where(path, key) + ": expected a string");
  out = obj[key].get<std::string>();
  return true;
}

bool read_flag(const json &obj, const std::string &path, const char *key, int &out) {
  bool b = out != 0;
  if (!read(obj, path, key, b)) return false;
  out = b ? 1 : 0;
  return true;
}

const char *reference_name(int kind) {
  switch (kind) {
  case FOTD_REF_SIN: return "sin";
  case FOTD_REF_SIN_SQUARED: return "sin_squared";
  default: return "constant";
  }
}

void read_reference(const json &obj, const std::string &path, int &kind, double &amplitude) {
  if (!obj.contains("d")) return;
  const std::string p = path + ".d";
  check_keys(obj["d"], p, {"type", "amplitude"});
  std::string type = reference_name(kind);
  read(obj["d"], p, "type", type);
  if (type == "constant") kind = FOTD_REF_CONSTANT;
  else if (type == "sin") kind = FOTD_REF_SIN;
  else if (type == "sin_squared") kind = FOTD_REF_SIN_SQUARED;
  else throw ConfigError(p + ".type: unknown reference '" + type + "' (constant, sin, sin_squared)");
  read(obj["d"], p, "amplitude", amplitude);
}

void parse_problem(const json &j, ProblemConfig &pc) {
  const std::string path = "problem";
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  read(j, path, "type", pc.type);
  if (pc.type == "toy") {
    check_keys(j, path, {"type", "case", "N", "C1", "C2", "d"});
    int n = 0;
    const bool has_n = read(j, path, "N", n);
    int which = 0;
    if (read(j, path, "case", which)) {
      if (fotd_toy_case(which, has_n ? n : 0, &pc.toy) != FOTD_OK)
        throw ConfigError("problem.case: " + std::string(fotd_last_error()));
      pc.toy_case = which;
    } else if (has_n) {
      pc.toy.horizon = n;
    }
    read(j, path, "C1", pc.toy.c1);
    read(j, path, "C2", pc.toy.c2);
    read_reference(j, path, pc.toy.reference, pc.toy.amplitude);
    if (pc.toy.horizon < 2) throw ConfigError("problem.N: toy horizon must be at least 2");
  } else if (pc.type == "plate") {
    check_keys(j, path, {"type", "mesh", "N", "hc", "kappa", "emissivity", "sigma", "ambient",
                         "thickness", "d"});
    auto &s = pc.plate;
    read(j, path, "mesh", s.mesh);
    read(j, path, "N", s.horizon);
    read(j, path, "hc", s.hc);
    read(j, path, "kappa", s.kappa);
    read(j, path, "emissivity", s.emissivity);
    read(j, path, "sigma", s.sigma);
    read(j, path, "ambient", s.ambient);
    read(j, path, "thickness", s.thickness);
    read_reference(j, path, s.reference, s.amplitude);
    if (s.mesh < 3) throw ConfigError("problem.mesh: must be at least 3");
    if (s.horizon < 1) throw ConfigError("problem.N: must be positive");
  } else {
    throw ConfigError("problem.type: unknown problem '" + pc.type + "' (toy, plate)");
  }
}

void parse_solver(const json &j, ExperimentConfig &c) {
  const std::string path = "solver";
  check_keys(j, path,
             {"mode", "mu", "eta1", "eta2", "beta", "backtrack", "M", "b", "kkt_tol", "step_tol",
              "max_iters", "definiteness_c", "gamma_step", "adaptivity", "nu", "rho_hat",
              "workers", "inner_tol", "inner_max_iters"});
  if (j.contains("mode")) {
    const auto &m = j["mode"];
    c.modes.clear();
    if (m.is_string()) {
      c.modes.push_back(parse_mode(m.get<std::string>()));
    } else if (m.is_array() && !m.empty()) {
      for (const auto &x : m) {
        if (!x.is_string()) throw ConfigError("solver.mode: expected mode names");
        c.modes.push_back(parse_mode(x.get<std::string>()));
      }
    } else {
      throw ConfigError("solver.mode: expected a mode name or a non-empty list");
    }
  }
  auto &s = c.solver;
  read(j, path, "mu", s.mu);
  read(j, path, "eta1", s.eta1);
  read(j, path, "eta2", s.eta2);
  read(j, path, "beta", s.beta);
  read(j, path, "backtrack", s.backtrack);
  read(j, path, "M", s.subproblems);
  read(j, path, "b", s.overlap);
  read(j, path, "kkt_tol", s.kkt_tol);
  read(j, path, "step_tol", s.step_tol);
  c.max_iters_explicit = read(j, path, "max_iters", s.max_iters);
  if (j.contains("definiteness_c")) {
    if (j["definiteness_c"].is_null()) {
      s.has_definiteness_c = 0;
    } else {
      read(j, path, "definiteness_c", s.definiteness_c);
      s.has_definiteness_c = 1;
    }
  }
  read(j, path, "gamma_step", s.gamma_step);
  read_flag(j, path, "adaptivity", s.adaptivity);
  read(j, path, "nu", s.nu);
  read(j, path, "rho_hat", s.rho_hat);
  read(j, path, "workers", s.workers);
  read(j, path, "inner_tol", s.inner_tol);
  read(j, path, "inner_max_iters", s.inner_max_iters);
}

void parse_run(const json &j, ExperimentConfig &c) {
  const std::string path = "run";
  check_keys(j, path, {"inits", "seed", "out", "diagnostics", "assert_level", "timing"});
  read(j, path, "inits", c.run.inits);
  read(j, path, "seed", c.run.seed);
  read(j, path, "out", c.run.out);
  read_flag(j, path, "diagnostics", c.solver.diagnostics);
  std::string level = c.solver.assert_level ? "on" : "off";
  if (read(j, path, "assert_level", level)) {
    if (level != "on" && level != "off")
      throw ConfigError("run.assert_level: expected \"on\" or \"off\"");
    c.solver.assert_level = level == "on";
  }
  read(j, path, "timing", c.run.timing);
  if (c.run.inits < 1) throw ConfigError("run.inits: must be at least 1");
}

} // namespace

ExperimentConfig parse_config(const json &j) {
  check_keys(j, "config", {"problem", "solver", "run"});
  ExperimentConfig c;
  if (j.contains("problem")) parse_problem(j["problem"], c.problem);
  if (j.contains("solver")) parse_solver(j["solver"], c);
  if (j.contains("run")) parse_run(j["run"], c);
  if (fotd_config_validate(&c.solver) != FOTD_OK)
    throw ConfigError("solver: " + std::string(fotd_last_error()));
  return c;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json emit_config(const ExperimentConfig &c) {
  json problem;
  problem["type"] = c.problem.type;
  if (c.problem.type == "toy") {
    const auto &t = c.problem.toy;
    if (c.problem.toy_case) problem["case"] = *c.problem.toy_case;
    problem["N"] = t.horizon;
    problem["C1"] = t.c1;
    problem["C2"] = t.c2;
    problem["d"] = {{"type", reference_name(t.reference)}, {"amplitude", t.amplitude}};
  } else {
    const auto &s = c.problem.plate;
    problem["mesh"] = s.mesh;
    problem["N"] = s.horizon;
    problem["hc"] = s.hc;
    problem["kappa"] = s.kappa;
    problem["emissivity"] = s.emissivity;
    problem["sigma"] = s.sigma;
    problem["ambient"] = s.ambient;
    problem["thickness"] = s.thickness;
    problem["d"] = {{"type", reference_name(s.reference)}, {"amplitude", s.amplitude}};
  }

  const auto &s = c.solver;
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(mode_name(m));
  json solver = {{"mode", c.modes.size() == 1 ? json(mode_name(c.modes[0])) : modes},
                 {"mu", s.mu},
                 {"eta1", s.eta1},
                 {"eta2", s.eta2},
                 {"beta", s.beta},
                 {"backtrack", s.backtrack},
                 {"M", s.subproblems},
                 {"b", s.overlap},
                 {"kkt_tol", s.kkt_tol},
                 {"step_tol", s.step_tol},
                 {"definiteness_c", s.has_definiteness_c ? json(s.definiteness_c) : json()},
                 {"gamma_step", s.gamma_step},
                 {"adaptivity", s.adaptivity != 0},
                 {"nu", s.nu},
                 {"rho_hat", s.rho_hat},
                 {"workers", s.workers},
                 {"inner_tol", s.inner_tol},
                 {"inner_max_iters", s.inner_max_iters}};
  if (c.max_iters_explicit) solver["max_iters"] = s.max_iters;

  json run = {{"inits", c.run.inits},
              {"seed", c.run.seed},
              {"out", c.run.out},
              {"diagnostics", s.diagnostics != 0},
              {"assert_level", s.assert_level ? "on" : "off"},
              {"timing", c.run.timing}};
  return {{"problem", problem}, {"solver", solver}, {"run", run}};
}

namespace {

auto tie(const fotd_toy_spec &t) {
  return std::tie(t.horizon, t.c1, t.c2, t.reference, t.amplitude);
}
auto tie(const fotd_plate_spec &p) {
  return std::tie(p.mesh, p.horizon, p.hc, p.kappa, p.emissivity, p.sigma, p.ambient,
                  p.thickness, p.reference, p.amplitude);
}
auto tie(const fotd_config &s) {
  return std::tie(s.mu, s.eta1, s.eta2, s.beta, s.backtrack, s.subproblems, s.overlap,
                  s.kkt_tol, s.step_tol, s.max_iters, s.has_definiteness_c,
                  s.definiteness_c, s.gamma_step, s.adaptivity, s.nu, s.rho_hat, s.workers,
                  s.diagnostics, s.assert_level, s.inner_tol, s.inner_max_iters);
}

} // namespace

bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) {
  if (a.problem.type != b.problem.type || a.problem.toy_case != b.problem.toy_case)
    return false;
  const bool same_problem = a.problem.type == "toy" ? tie(a.problem.toy) == tie(b.problem.toy)
                                                    : tie(a.problem.plate) == tie(b.problem.plate);
  return same_problem && a.modes == b.modes && tie(a.solver) == tie(b.solver) &&
         a.max_iters_explicit == b.max_iters_explicit && a.run.inits == b.run.inits &&
         a.run.seed == b.run.seed && a.run.out == b.run.out && a.run.timing == b.run.timing;
}

} // namespace fotd_cli
