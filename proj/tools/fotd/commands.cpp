#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>

namespace fotd_cli {

namespace fs = std::filesystem;
using nlohmann::json;

void Overrides::apply(ExperimentConfig &c) const {
  if (out) c.run.out = *out;
  if (!modes.empty()) c.modes = modes;
  if (seed) c.run.seed = *seed;
  if (workers) c.solver.workers = *workers;
  if (assert_on) c.solver.assert_level = *assert_on ? 1 : 0;
  if (diagnostics) c.solver.diagnostics = 1;
  if (fotd_config_validate(&c.solver) != FOTD_OK)
    throw ConfigError("command line: " + std::string(fotd_last_error()));
}

namespace {

struct ProblemDeleter {
  void operator()(fotd_problem *p) const { fotd_problem_destroy(p); }
};
struct ReportDeleter {
  void operator()(fotd_report *r) const { fotd_report_destroy(r); }
};
using ProblemPtr = std::unique_ptr<fotd_problem, ProblemDeleter>;
using ReportPtr = std::unique_ptr<fotd_report, ReportDeleter>;

/// Thrown when the library rejects an otherwise well-formed request.
struct InvalidRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt6(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json num6(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt6(v));
}

void write_text_atomic(const fs::path &path, const std::string &text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

ProblemPtr make_problem(const ProblemConfig &pc) {
  fotd_problem *p = nullptr;
  const fotd_status s = pc.type == "toy" ? fotd_problem_create_toy(&pc.toy, &p)
                                         : fotd_problem_create_plate(&pc.plate, &p);
  if (s != FOTD_OK) throw ConfigError("problem: " + std::string(fotd_last_error()));
  return ProblemPtr(p);
}

struct Sizes {
  size_t nz = 0, nl = 0;
};

Sizes sizes_of(const fotd_problem *p) {
  Sizes s;
  fotd_problem_sizes(p, &s.nz, &s.nl);
  return s;
}

struct Inits {
  std::vector<double> z, lambda;
};

Inits make_inits(const fotd_problem *p, int count, std::uint64_t seed) {
  const Sizes s = sizes_of(p);
  Inits in{std::vector<double>(s.nz * count), std::vector<double>(s.nl * count)};
  if (fotd_initializations(p, count, seed, in.z.data(), in.lambda.data()) != FOTD_OK)
    throw ConfigError("run.inits: " + std::string(fotd_last_error()));
  return in;
}

struct RunResult {
  int init = 0;
  int status = FOTD_SOLVE_ERROR;
  int error = FOTD_OK;
  std::string message;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double total_ms = 0.0;
  int descent_violations = 0;
  int adaptations = 0;
  double mean_dir_err = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> z, lambda;

  bool converged() const {
    return status == FOTD_SOLVE_CONVERGED_KKT || status == FOTD_SOLVE_CONVERGED_STEP;
  }
};

RunResult run_one(const fotd_problem *p, const fotd_config &cfg, Mode mode, const Inits &in,
                  int i, const fs::path &dir, bool timing) {
  const Sizes s = sizes_of(p);
  fotd_report *raw = nullptr;
  if (fotd_solve(p, &cfg, mode_code(mode), in.z.data() + s.nz * i,
                 in.lambda.data() + s.nl * i, &raw) != FOTD_OK)
    throw InvalidRequest(fotd_last_error());
  ReportPtr rep(raw);

  RunResult r;
  r.init = i;
  r.status = fotd_report_status(rep.get());
  r.error = fotd_report_error(rep.get());
  r.message = fotd_report_message(rep.get());
  r.iterations = fotd_report_record_count(rep.get()) - 1;
  r.total_ms = fotd_report_total_ms(rep.get());
  r.descent_violations = fotd_report_descent_violations(rep.get());
  r.adaptations = fotd_report_adaptations(rep.get());
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < fotd_report_record_count(rep.get()); ++k) {
    fotd_record rec;
    fotd_report_record(rep.get(), k, &rec);
    r.final_residual = rec.kkt_residual;
    if (!std::isnan(rec.dir_err_ratio)) {
      sum += rec.dir_err_ratio;
      ++n;
    }
  }
  if (n > 0) r.mean_dir_err = sum / n;
  r.z.resize(s.nz);
  r.lambda.resize(s.nl);
  fotd_report_solution(rep.get(), r.z.data(), r.lambda.data());

  const auto csv = dir / ("run_" + std::to_string(i) + ".csv");
  const auto traj = dir / ("solution_" + std::to_string(i) + ".csv");
  if (fotd_report_write_csv(rep.get(), csv.c_str(), timing ? 1 : 0) != FOTD_OK ||
      fotd_report_write_trajectory(rep.get(), traj.c_str()) != FOTD_OK)
    throw std::runtime_error(fotd_last_error());
  return r;
}

json run_json(const RunResult &r) {
  json j = {{"init", r.init},
            {"status", fotd_solve_status_string(r.status)},
            {"converged", r.converged()},
            {"final_residual", num6(r.final_residual)},
            {"iterations", r.iterations},
            {"total_ms", num6(r.total_ms)},
            {"descent_violations", r.descent_violations},
            {"adaptations", r.adaptations}};
  if (!std::isnan(r.mean_dir_err)) j["mean_dir_err_ratio"] = num6(r.mean_dir_err);
  if (r.status == FOTD_SOLVE_ERROR) {
    j["error"] = fotd_status_string(r.error);
    j["message"] = r.message;
  }
  return j;
}

double inf_diff(const std::vector<double> &a, const std::vector<double> &b) {
  double m = 0.0;
  for (size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

/// Everything a command needs after loading; config problems become exit 2.
struct Session {
  ExperimentConfig cfg;
  ProblemPtr problem;
};

Session open_session(const std::string &path, const Overrides &o, std::ostream &err) {
  Session s;
  s.cfg = load_config(path);
  o.apply(s.cfg);
  s.problem = make_problem(s.cfg.problem);
  for (int i = 0; i < fotd_problem_warning_count(s.problem.get()); ++i)
    err << "warning: " << fotd_problem_warning(s.problem.get(), i) << "\n";
  return s;
}

template <class Fn> int run_command(std::ostream &err, Fn &&fn) {
  try {
    return fn();
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidRequest &e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

void print_runs(std::ostream &out, Mode mode, const std::vector<RunResult> &runs) {
  out << mode_name(mode) << ":\n";
  out << "  init  status           iters  kkt_residual   total_ms\n";
  for (const auto &r : runs) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-5d %-16s %5d  %-13s  %s\n", r.init,
                  fotd_solve_status_string(r.status), r.iterations,
                  fmt6(r.final_residual).c_str(), fmt6(r.total_ms).c_str());
    out << line;
    if (r.status == FOTD_SOLVE_ERROR) out << "        " << r.message << "\n";
  }
}

} // namespace

int cmd_solve(const std::string &config_path, const Overrides &o, std::ostream &out,
              std::ostream &err) {
  return run_command(err, [&] {
    Session s = open_session(config_path, o, err);
    const auto &c = s.cfg;
    const Inits inits = make_inits(s.problem.get(), c.run.inits, c.run.seed);
    const fs::path root = c.run.out;
    fs::create_directories(root);

    json summary = {{"config", emit_config(c)}, {"modes", json::array()}};
    std::vector<std::vector<RunResult>> all;
    bool ok = true;
    for (Mode mode : c.modes) {
      const fs::path dir = c.modes.size() == 1 ? root : root / mode_name(mode);
      fs::create_directories(dir);
      const fotd_config cfg = c.solver_for(mode);
      std::vector<RunResult> runs;
      json jr = json::array();
      for (int i = 0; i < c.run.inits; ++i) {
        runs.push_back(run_one(s.problem.get(), cfg, mode, inits, i, dir, c.run.timing));
        jr.push_back(run_json(runs.back()));
        ok = ok && runs.back().converged();
      }
      print_runs(out, mode, runs);
      summary["modes"].push_back({{"mode", mode_name(mode)}, {"runs", jr}});
      all.push_back(std::move(runs));
    }

    if (c.modes.size() > 1) {
      json cmp = json::array();
      out << "final iterate differences (inf-norm) against " << mode_name(c.modes[0]) << ":\n";
      for (size_t m = 1; m < c.modes.size(); ++m)
        for (int i = 0; i < c.run.inits; ++i) {
          const double dz = inf_diff(all[0][i].z, all[m][i].z);
          const double dl = inf_diff(all[0][i].lambda, all[m][i].lambda);
          out << "  " << mode_name(c.modes[m]) << " init " << i << ": z " << fmt6(dz)
              << ", lambda " << fmt6(dl) << "\n";
          cmp.push_back({{"mode", mode_name(c.modes[m])},
                         {"init", i},
                         {"z_inf_diff", num6(dz)},
                         {"lambda_inf_diff", num6(dl)}});
        }
      summary["comparison"] = cmp;
    }
    summary["all_converged"] = ok;
    write_text_atomic(root / "summary.json", summary.dump(2) + "\n");
    return ok ? kExitOk : kExitSolver;
  });
}

int cmd_sweep(const std::string &config_path, const Overrides &o, const SweepLists &lists,
              std::ostream &out, std::ostream &err) {
  return run_command(err, [&] {
    Session s = open_session(config_path, o, err);
    const auto &c = s.cfg;
    const std::vector<int> bs = lists.b.empty() ? std::vector<int>{c.solver.overlap} : lists.b;
    const std::vector<double> mus =
        lists.mu.empty() ? std::vector<double>{c.solver.mu} : lists.mu;
    const Inits inits = make_inits(s.problem.get(), c.run.inits, c.run.seed);
    const fs::path root = c.run.out;
    fs::create_directories(root);

    json cells = json::array();
    std::string table = "mode,b,mu,runs,converged,mean_kkt_residual,mean_ms,mean_iterations,"
                        "mean_dir_err_ratio\n";
    bool ok = true;
    for (Mode mode : c.modes) {
      out << mode_name(mode) << ": mean KKT residual / mean ms over converged runs\n";
      out << "  mu \\ b";
      for (int b : bs) out << "  " << b;
      out << "\n";
      for (double mu : mus) {
        out << "  " << fmt6(mu);
        for (int b : bs) {
          fotd_config cfg = c.solver_for(mode);
          cfg.overlap = b;
          cfg.mu = mu;
          if (fotd_config_validate(&cfg) != FOTD_OK)
            throw ConfigError("sweep: " + std::string(fotd_last_error()));
          fs::path dir = root;
          if (c.modes.size() > 1) dir /= mode_name(mode);
          dir /= "b" + std::to_string(b) + "_mu" + fmt6(mu);
          fs::create_directories(dir);
          int conv = 0;
          double res = 0.0, ms = 0.0, iters = 0.0, derr = 0.0;
          int nderr = 0;
          json runs = json::array();
          for (int i = 0; i < c.run.inits; ++i) {
            const auto r = run_one(s.problem.get(), cfg, mode, inits, i, dir, c.run.timing);
            runs.push_back(run_json(r));
            ok = ok && r.converged();
            if (!std::isnan(r.mean_dir_err)) {
              derr += r.mean_dir_err;
              ++nderr;
            }
            if (!r.converged()) continue;
            ++conv;
            res += r.final_residual;
            ms += r.total_ms;
            iters += r.iterations;
          }
          const double nan = std::numeric_limits<double>::quiet_NaN();
          const double mres = conv ? res / conv : nan, mms = conv ? ms / conv : nan;
          const double mit = conv ? iters / conv : nan, mder = nderr ? derr / nderr : nan;
          out << "  " << fmt6(mres) << " / " << fmt6(mms);
          table += std::string(mode_name(mode)) + "," + std::to_string(b) + "," + fmt6(mu) +
                   "," + std::to_string(c.run.inits) + "," + std::to_string(conv) + "," +
                   (conv ? fmt6(mres) : "") + "," + (conv ? fmt6(mms) : "") + "," +
                   (conv ? fmt6(mit) : "") + "," + (nderr ? fmt6(mder) : "") + "\n";
          json cell = {{"mode", mode_name(mode)},   {"b", b},
                       {"mu", num6(mu)},            {"runs", runs},
                       {"converged", conv},         {"mean_kkt_residual", num6(mres)},
                       {"mean_ms", num6(mms)},      {"mean_iterations", num6(mit)}};
          if (nderr) cell["mean_dir_err_ratio"] = num6(mder);
          cells.push_back(cell);
        }
        out << "\n";
      }
    }
    write_text_atomic(root / "sweep_summary.csv", table);
    write_text_atomic(root / "sweep_summary.json",
                      json{{"config", emit_config(c)}, {"cells", cells}, {"all_converged", ok}}
                              .dump(2) +
                          "\n");
    return ok ? kExitOk : kExitSolver;
  });
}

double log_slope(const std::vector<int> &b, const std::vector<double> &ratio) {
  const size_t n = b.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += b[i];
    my += std::log(ratio[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (b[i] - mx) * (std::log(ratio[i]) - my);
    sxx += (b[i] - mx) * (b[i] - mx);
  }
  return sxy / sxx;
}

namespace {

ProblemPtr problem_with_horizon(ProblemConfig pc, int horizon) {
  pc.toy.horizon = horizon;
  pc.plate.horizon = horizon;
  return make_problem(pc);
}

/// Random iterate with coordinates in [-1, 1] and x_0 = 0 (the benchmark
/// families start at the origin).
void random_iterate(const fotd_problem *p, std::mt19937_64 &rng, std::vector<double> &z,
                    std::vector<double> &lambda) {
  const Sizes s = sizes_of(p);
  int nx = 0;
  fotd_problem_dims(p, nullptr, &nx, nullptr);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  z.resize(s.nz);
  lambda.resize(s.nl);
  for (auto &v : z) v = u(rng);
  for (auto &v : lambda) v = u(rng);
  for (int k = 0; k < nx; ++k) z[k] = 0.0;
}

} // namespace

int cmd_diag(const std::string &config_path, const Overrides &o, const DiagOptions &d,
             std::ostream &out, std::ostream &err) {
  return run_command(err, [&] {
    Session s = open_session(config_path, o, err);
    const auto &c = s.cfg;
    bool ok = true;

    double gg = 0.0, mb = 0.0;
    if (fotd_theory_gamma_g(d.gamma_c, d.t, d.upsilon, &gg) != FOTD_OK ||
        fotd_theory_mu_bar(d.gamma_c, d.t, d.upsilon, &mb) != FOTD_OK)
      throw ConfigError(std::string("diag constants: ") + fotd_last_error());
    out << "constants for gamma_C=" << fmt6(d.gamma_c) << ", t=" << fmt6(d.t)
        << ", Upsilon=" << fmt6(d.upsilon) << ": gamma_G=" << fmt6(gg)
        << ", mu_bar=" << fmt6(mb) << "\n";

    std::mt19937_64 rng(c.run.seed);
    {
      const auto p = problem_with_horizon(c.problem, 100);
      double worst = 0.0;
      std::vector<double> z, l;
      for (int b : {1, 5})
        for (int t = 0; t < 10; ++t) {
          random_iterate(p.get(), rng, z, l);
          double gap = 0.0;
          if (fotd_newton_equivalence_gap(p.get(), 5, b, c.solver.mu, c.solver.workers,
                                          z.data(), l.data(), &gap) != FOTD_OK)
            throw std::runtime_error(std::string("equivalence check: ") + fotd_last_error());
          worst = std::max(worst, gap);
        }
      const bool pass = worst <= 1e-9;
      ok = ok && pass;
      out << "one-Newton-step Schwarz vs unit decomposed update (N=100, M=5, b in {1,5}, "
          << "10 iterates): max gap " << fmt6(worst) << " -> " << (pass ? "PASS" : "FAIL")
          << "\n";
    }
    {
      const auto p = problem_with_horizon(c.problem, 200);
      std::vector<double> z, l;
      random_iterate(p.get(), rng, z, l);
      const std::vector<int> bs{1, 2, 4, 8};
      std::vector<double> ratios;
      for (int b : bs) {
        fotd_config cfg = c.solver;
        cfg.subproblems = 10;
        cfg.overlap = b;
        double r = 0.0;
        if (fotd_direction_error(p.get(), &cfg, z.data(), l.data(), &r) != FOTD_OK)
          throw std::runtime_error(std::string("direction error: ") + fotd_last_error());
        ratios.push_back(r);
      }
      bool decreasing = true;
      for (size_t i = 1; i < ratios.size(); ++i) decreasing = decreasing && ratios[i] < ratios[i - 1];
      const double slope = log_slope(bs, ratios);
      const bool pass = decreasing && slope < 0.0;
      ok = ok && pass;
      out << "direction error vs overlap (N=200, M=10):";
      for (size_t i = 0; i < bs.size(); ++i) out << " b=" << bs[i] << ":" << fmt6(ratios[i]);
      out << "; log-slope " << fmt6(slope) << " -> " << (pass ? "PASS" : "FAIL") << "\n";
    }
    return ok ? kExitOk : kExitSolver;
  });
}

} // namespace fotd_cli
