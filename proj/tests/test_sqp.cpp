#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fotd/benchmarks.hpp"
#include "fotd/sqp.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace fotd;

namespace {

PrimalDual zeros(const ProblemDef &p) {
  return {Trajectory(p.layout()), DualTrajectory(p.layout())};
}

PrimalDual dense_optimum(const ProblemDef &p) {
  PrimalDual s = zeros(p);
  for (int it = 0; it < 30; ++it) {
    const auto d = oracle::dense_newton(assemble_newton_data(p, s.z, s.lambda));
    s.z.data += d.primal;
    s.lambda.data += d.dual;
  }
  return s;
}

SolverConfig decomposed(int M, int b, double mu) {
  SolverConfig c;
  c.subproblems = M;
  c.overlap = b;
  c.mu = mu;
  return c;
}

} // namespace

TEST_CASE("Armijo backtracking") {
  SUBCASE("exact minimizer at unit step") {
    auto phi = [](double a) { return 0.5 * (1 - a) * (1 - a); };
    const auto r = armijo_backtrack(phi, phi(0.0), -1.0, 0.1, 0.9);
    CHECK(r.alpha == 1.0);
    CHECK(r.backtracks == 0);
  }

  SUBCASE("first accepted power matches a scan") {
    auto phi = [](double a) { return 0.5 * (1 - 3 * a) * (1 - 3 * a); };
    int j = 0;
    double a = 1.0;
    while (phi(a) - phi(0.0) > 0.4 * a * -3.0) {
      a *= 0.9;
      ++j;
    }
    REQUIRE(j > 0);
    const auto r = armijo_backtrack(phi, phi(0.0), -3.0, 0.4, 0.9);
    CHECK(r.backtracks == j);
    CHECK(r.alpha == a);
    CHECK(r.merit == phi(a));
  }

  SUBCASE("ascent direction") {
    try {
      armijo_backtrack([](double a) { return a; }, 0.0, 1.0, 0.1, 0.9);
      FAIL("expected an error");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::non_descent);
    }
  }

  SUBCASE("stepsize underflow") {
    try {
      armijo_backtrack([](double) { return 1.0; }, 0.0, -1.0, 0.1, 0.5);
      FAIL("expected an error");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::line_search_failure);
    }
  }
}

TEST_CASE("penalty adaptation") {
  SolverConfig c;
  c.overlap = 3;
  const auto a = adapt_penalties(c, 2.0);
  CHECK(a.eta.eta1 == doctest::Approx(40.0));
  CHECK(a.eta.eta2 == doctest::Approx(0.05));
  CHECK(a.overlap == 7);
  c.rho_hat = 0.25;
  CHECK(adapt_penalties(c, 2.0).overlap == 5);
}

TEST_CASE("configuration checks") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto edit) {
    SolverConfig x;
    edit(x);
    CHECK_THROWS_AS(x.validate(), Error);
  };
  bad([](SolverConfig &x) { x.beta = 0.5; });
  bad([](SolverConfig &x) { x.backtrack = 1.0; });
  bad([](SolverConfig &x) { x.mu = 0.0; });
  bad([](SolverConfig &x) { x.nu = 1.0; });
  bad([](SolverConfig &x) { x.rho_hat = 1.0; });
  bad([](SolverConfig &x) { x.eta.eta2 = 0.0; });
  bad([](SolverConfig &x) { x.workers = 0; });
}

TEST_CASE("plan from the solver configuration") {
  const auto plan = plan_for(decomposed(4, 100, 1.0), 20);
  CHECK(plan.overlap == 19);
  CHECK(plan.size() == 4);
}

TEST_CASE("solve from a KKT point") {
  std::mt19937_64 rng(3);
  auto p = testprob::make_lq_problem(testprob::random_lq_data(rng, 8, 2, 1));
  const auto opt = dense_optimum(*p);
  for (auto mode : {SolveMode::fotd, SolveMode::centralized}) {
    const auto r = solve(*p, decomposed(2, 1, 10.0), opt, mode);
    CHECK(r.status == SolveStatus::converged_kkt);
    CHECK(r.records.size() == 1);
  }
}

TEST_CASE("quadratic program converges in one step") {
  std::mt19937_64 rng(5);
  auto p = testprob::make_lq_problem(testprob::random_lq_data(rng, 10, 1, 2));
  const auto r = solve(*p, SolverConfig{}, zeros(*p), SolveMode::centralized);
  CHECK(r.converged());
  REQUIRE(r.records.size() >= 2);
  CHECK(r.records[0].stepsize == 1.0);
  CHECK(r.records[1].kkt_residual <= 1e-9);
}

TEST_CASE("single subproblem reproduces the centralized step") {
  auto p = make_toy_problem(toy_case(2, 30));
  const auto init = make_initializations(*p, 2, 4)[1];
  const auto a = sqp_step(*p, init, decomposed(1, 1, 5.0), SolveMode::fotd);
  const auto b = sqp_step(*p, init, decomposed(1, 1, 5.0), SolveMode::centralized);
  CHECK(a.next.z.data == b.next.z.data);
  CHECK(a.next.lambda.data == b.next.lambda.data);
  CHECK(a.record.stepsize == b.record.stepsize);
  CHECK(a.record.merit == b.record.merit);
}

TEST_CASE("full overlap follows the centralized iterates") {
  auto p = make_toy_problem(toy_case(1, 40));
  const auto init = make_initializations(*p, 2, 9)[1];
  const auto f = solve(*p, decomposed(4, 39, 1.0), init, SolveMode::fotd);
  const auto c = solve(*p, decomposed(4, 39, 1.0), init, SolveMode::centralized);
  REQUIRE(f.records.size() == c.records.size());
  for (std::size_t i = 0; i < f.records.size(); ++i)
    CHECK(std::abs(f.records[i].kkt_residual - c.records[i].kkt_residual) <=
          1e-9 * (1.0 + c.records[i].kkt_residual));
  CHECK((f.solution.z.data - c.solution.z.data).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("decomposed solve on a scalar instance") {
  auto p = make_toy_problem(toy_case(1, 500));
  const auto r = solve(*p, decomposed(10, 25, 1.0), zeros(*p), SolveMode::fotd);
  CHECK(r.status == SolveStatus::converged_kkt);
  CHECK(r.descent_violations == 0);
  CHECK(r.records.size() <= 41);
  CHECK(r.final_residual() <= 1e-6);
  for (std::size_t i = 1; i < r.records.size(); ++i)
    CHECK(r.records[i].merit < r.records[i - 1].merit);
  for (const auto &rec : r.records)
    if (!std::isnan(rec.slope)) CHECK(rec.slope <= rec.descent_bound);
}

TEST_CASE("initial state is pinned") {
  auto p = make_toy_problem(toy_case(3, 60));
  auto init = make_initializations(*p, 2, 1)[1];
  init.z.x(0)[0] = 123.0;
  const auto r = solve(*p, decomposed(6, 3, 25.0), init, SolveMode::fotd);
  CHECK(r.converged());
  CHECK(r.solution.z.x(0) == p->initial_state());
}

TEST_CASE("errors keep the iteration history") {
  PlateSpec ps;
  ps.horizon = 500;
  auto p = make_plate_problem(ps);
  auto cfg = decomposed(10, 5, 25.0);
  const auto r = solve(*p, cfg, zeros(*p), SolveMode::fotd);
  CHECK(r.status == SolveStatus::error);
  CHECK(r.error == ErrorCode::descent_assertion);
  CHECK(r.records.size() == 1);
  CHECK_FALSE(r.message.empty());

  SUBCASE("without the assertion the line search rejects the direction") {
    cfg.assert_level = AssertLevel::off;
    const auto off = solve(*p, cfg, zeros(*p), SolveMode::fotd);
    CHECK(off.error == ErrorCode::non_descent);
  }

  SUBCASE("adaptivity recovers") {
    cfg.adaptivity = true;
    const auto a = solve(*p, cfg, zeros(*p), SolveMode::fotd);
    CHECK(a.converged());
    CHECK(a.adaptations > 0);
    CHECK(a.final_config.eta.eta2 < cfg.eta.eta2);
    CHECK(a.final_config.eta.eta1 > cfg.eta.eta1);
    CHECK(a.final_config.overlap > cfg.overlap);
  }
}

TEST_CASE("iteration budget") {
  auto p = make_toy_problem(toy_case(2, 100));
  auto cfg = decomposed(10, 1, 1.0);
  cfg.max_iters = 2;
  const auto r = solve(*p, cfg, make_initializations(*p, 2, 42)[1], SolveMode::fotd);
  CHECK(r.status == SolveStatus::max_iters);
  CHECK(r.records.size() == 3);
}

TEST_CASE("direction error diagnostic") {
  auto p = make_toy_problem(toy_case(1, 80));
  const auto s = make_initializations(*p, 2, 3)[1];
  CHECK(direction_error_diagnostic(*p, s.z, s.lambda, decomposed(1, 1, 1.0)) == 0.0);
  const double r1 = direction_error_diagnostic(*p, s.z, s.lambda, decomposed(8, 1, 25.0));
  const double r8 = direction_error_diagnostic(*p, s.z, s.lambda, decomposed(8, 8, 25.0));
  CHECK(r8 < r1);
  CHECK(direction_error_diagnostic(*p, s.z, s.lambda, decomposed(8, 79, 25.0)) <= 1e-9);

  std::mt19937_64 rng(1);
  auto data = testprob::random_lq_data(rng, 6, 1, 1);
  for (auto &v : data.linear) v.setZero();
  for (auto &v : data.offset) v.setZero();
  data.x0.setZero();
  auto q = testprob::make_lq_problem(data);
  try {
    direction_error_diagnostic(*q, Trajectory(q->layout()), DualTrajectory(q->layout()),
                               decomposed(2, 1, 1.0));
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::undefined_ratio);
  }

  SolverConfig cfg = decomposed(8, 2, 25.0);
  cfg.diagnostics = true;
  const auto r = solve(*p, cfg, s, SolveMode::fotd);
  CHECK(r.converged());
  CHECK_FALSE(std::isnan(r.records.front().dir_err_ratio));
}

TEST_CASE("iteration csv") {
  auto p = make_toy_problem(toy_case(1, 50));
  const auto r = solve(*p, decomposed(5, 2, 1.0), zeros(*p), SolveMode::fotd);
  const std::string text = iteration_csv(r, false);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,kkt_residual,merit,stepsize,gamma,dir_err_ratio,wall_ms");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.back() == ',');
    CHECK(line.find(",,") != std::string::npos);
  }
  CHECK(rows == static_cast<int>(r.records.size()));
  CHECK(iteration_csv(r, false) == text);
  const std::string timed = iteration_csv(r, true);
  CHECK(timed.substr(0, timed.find('\n')) == text.substr(0, text.find('\n')));
}
