#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fotd/benchmarks.hpp"
#include "fotd/newton_kkt.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace fotd;

namespace {

PrimalDual random_point(const ProblemDef &p, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  PrimalDual s{Trajectory(p.layout(), oracle::random_vector(rng, p.layout().primal_size(), scale)),
               DualTrajectory(p.layout(), oracle::random_vector(rng, p.layout().dual_size(), scale))};
  return s;
}

/// Pure Newton iteration with the dense solver.
PrimalDual dense_newton_solve(const ProblemDef &p, int iters = 30) {
  PrimalDual s{Trajectory(p.layout()), DualTrajectory(p.layout())};
  for (int it = 0; it < iters; ++it) {
    const auto d = oracle::dense_newton(assemble_newton_data(p, s.z, s.lambda));
    s.z.data += d.primal;
    s.lambda.data += d.dual;
  }
  return s;
}

} // namespace

TEST_CASE("objective of the scalar problem at zero") {
  auto p = make_toy_problem(toy_case(1, 2));
  const Trajectory z(p->layout());
  const double expected = 2.0 * (2.0 * std::cos(1.0) * std::cos(1.0) + 7.0);
  CHECK(eval_objective(*p, z) == doctest::Approx(expected).epsilon(1e-14));
  // exact value 15.1677061...
  CHECK(eval_objective(*p, z) == doctest::Approx(15.16773).epsilon(2e-6));
}

TEST_CASE("empty cost evaluates to zero") {
  ProblemCallbacks cb;
  cb.cost = [](int, const Vector &, const Vector &) { return 0.0; };
  cb.cost_gradient = [](int, const Vector &x, const Vector &u) -> Vector {
    return Vector::Zero(x.size() + u.size());
  };
  cb.cost_hessian = [](int, const Vector &x, const Vector &u) -> Matrix {
    return Matrix::Zero(x.size() + u.size(), x.size() + u.size());
  };
  cb.dynamics = [](int, const Vector &x, const Vector &u) -> Vector { return x + u; };
  cb.dynamics_jacobian = [](int, const Vector &, const Vector &) -> Matrix {
    return Matrix::Ones(1, 2);
  };
  cb.dynamics_hessian_contraction = [](int, const Vector &, const Vector &,
                                       const Vector &) -> Matrix { return Matrix::Zero(2, 2); };
  ProblemDef p(3, 1, 1, Vector::Zero(1), cb);
  Trajectory z(p.layout(), Vector::LinSpaced(p.layout().primal_size(), -2.0, 5.0));
  CHECK(eval_objective(p, z) == 0.0);
}

TEST_CASE("constraint residual") {
  auto p = make_toy_problem(toy_case(1, 2));

  SUBCASE("zero trajectory") {
    const Vector c = eval_constraints(*p, Trajectory(p->layout()));
    REQUIRE(c.size() == 3);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == -1.0);
    CHECK(c[2] == -1.0);
  }

  SUBCASE("forward rollout is feasible") {
    auto q = make_toy_problem(toy_case(3, 7));
    Trajectory z(q->layout());
    std::mt19937_64 rng(3);
    z.x(0) = q->initial_state();
    for (int k = 0; k < 7; ++k) {
      z.u(k) = oracle::random_vector(rng, 1);
      z.x(k + 1) = q->callbacks().dynamics(k, z.x(k), z.u(k));
    }
    CHECK(eval_constraints(*q, z).lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("stagewise recomputation") {
    auto q = make_toy_problem(toy_case(2, 5));
    auto s = random_point(*q, 9, 3.0);
    const Vector c = eval_constraints(*q, s.z);
    const auto d = [](int k) { return 100.0 * std::sin(k) * std::sin(k); };
    const auto &x = s.z.data;
    CHECK(c[0] == doctest::Approx(x[0]).epsilon(1e-12));
    for (int k = 0; k < 5; ++k) {
      const double next = x[2 * k] + x[2 * k + 1] + d(k);
      CHECK(std::abs(c[k + 1] - (x[2 * k + 2] - next)) <= 1e-12 * (1.0 + std::abs(next)));
    }
  }
}

TEST_CASE("Lagrangian gradient") {
  SUBCASE("vanishes at the Newton fixed point") {
    auto p = make_toy_problem(toy_case(1, 5));
    const auto s = dense_newton_solve(*p);
    const auto g = eval_lagrangian_gradient(*p, s.z, s.lambda);
    CHECK(g.z.norm() <= 1e-8);
    CHECK(g.lambda.norm() <= 1e-8);
  }

  SUBCASE("linear-quadratic data at zero") {
    std::mt19937_64 rng(4);
    const auto d = testprob::random_lq_data(rng, 4, 2, 1);
    auto p = testprob::make_lq_problem(d);
    const auto g = eval_lagrangian_gradient(*p, Trajectory(p->layout()),
                                            DualTrajectory(p->layout()));
    for (int k = 0; k <= 4; ++k)
      CHECK((g.z.segment(p->layout().stage_offset(k), p->layout().stage_size(k)) -
             d.linear[k]).norm() == 0.0);
    CHECK((g.lambda.head(2) + d.x0).norm() == 0.0);
    for (int k = 0; k < 4; ++k) CHECK((g.lambda.segment(2 * k + 2, 2) + d.offset[k]).norm() == 0.0);
  }

  SUBCASE("matches finite differences of the Lagrangian") {
    auto p = make_toy_problem(toy_case(2, 3));
    const auto s = random_point(*p, 5);
    const auto g = eval_lagrangian_gradient(*p, s.z, s.lambda);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector &v) {
          return eval_lagrangian(*p, Trajectory(p->layout(), v), s.lambda);
        },
        s.z.data);
    CHECK(oracle::relative_error(g.z, fd) <= 1e-6);
    CHECK((g.lambda - eval_constraints(*p, s.z)).norm() == 0.0);
  }
}

TEST_CASE("merit function") {
  auto p = make_toy_problem(toy_case(1, 5));
  const PenaltyParams eta{10.0, 0.1};

  SUBCASE("equals the objective at a KKT point") {
    const auto s = dense_newton_solve(*p);
    CHECK(eval_merit(*p, s.z, s.lambda, eta) ==
          doctest::Approx(eval_objective(*p, s.z)).epsilon(1e-10));
    const auto mg = eval_merit_gradient(*p, s.z, s.lambda, eta);
    CHECK(mg.z.norm() <= 1e-7);
    CHECK(mg.lambda.norm() <= 1e-7);
  }

  SUBCASE("nonpositive penalties are rejected") {
    const auto s = random_point(*p, 1);
    CHECK_THROWS_AS(eval_merit(*p, s.z, s.lambda, PenaltyParams{0.0, 0.0}), Error);
    CHECK_THROWS_AS(eval_merit(*p, s.z, s.lambda, PenaltyParams{1.0, -1.0}), Error);
  }

  SUBCASE("recomposes from its parts") {
    const auto s = random_point(*p, 2);
    const auto g = eval_lagrangian_gradient(*p, s.z, s.lambda);
    const double expected = eval_objective(*p, s.z) + s.lambda.data.dot(g.lambda) +
                            5.0 * g.lambda.squaredNorm() + 0.05 * g.z.squaredNorm();
    CHECK(eval_merit(*p, s.z, s.lambda, eta) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("gradient matches finite differences") {
    auto q = make_toy_problem(toy_case(3, 3));
    const auto s = random_point(*q, 3);
    const auto mg = eval_merit_gradient(*q, s.z, s.lambda, eta);
    const Vector fz = oracle::fd_gradient(
        [&](const Vector &v) {
          return eval_merit(*q, Trajectory(q->layout(), v), s.lambda, eta);
        },
        s.z.data);
    const Vector fl = oracle::fd_gradient(
        [&](const Vector &v) {
          return eval_merit(*q, s.z, DualTrajectory(q->layout(), v), eta);
        },
        s.lambda.data);
    CHECK(oracle::relative_error(mg.z, fz) <= 1e-5);
    CHECK(oracle::relative_error(mg.lambda, fl) <= 1e-5);
  }

  SUBCASE("gradient of a quadratic program against dense products") {
    std::mt19937_64 rng(8);
    const auto d = testprob::random_lq_data(rng, 4, 2, 2);
    auto q = testprob::make_lq_problem(d);
    const auto s = random_point(*q, 6);
    const auto g = eval_lagrangian_gradient(*q, s.z, s.lambda);
    const Matrix H = oracle::dense_block_diagonal(4, 2, 2, d.hessian);
    const Matrix G = oracle::dense_constraint_jacobian(4, 2, 2, d.jacobian);
    const Vector ez = g.z + eta.eta2 * H * g.z + eta.eta1 * G.transpose() * g.lambda;
    const Vector el = eta.eta2 * G * g.z + g.lambda;
    const auto mg = eval_merit_gradient(*q, s.z, s.lambda, eta);
    CHECK(oracle::relative_error(mg.z, ez) <= 1e-10);
    CHECK(oracle::relative_error(mg.lambda, el) <= 1e-10);
  }
}

TEST_CASE("Lagrangian Hessian blocks") {
  SUBCASE("quadratic data returns the cost blocks") {
    std::mt19937_64 rng(12);
    const auto d = testprob::random_lq_data(rng, 3, 2, 1);
    auto p = testprob::make_lq_problem(d);
    const auto s = random_point(*p, 4);
    const auto H = lagrangian_hessian(*p, s.z, s.lambda);
    for (int k = 0; k <= 3; ++k) CHECK((H[k] - d.hessian[k]).norm() == 0.0);
  }

  SUBCASE("scalar problem at the origin") {
    ToySpec spec = toy_case(1, 3);
    spec.reference = [](int) { return 0.0; };
    auto p = make_toy_problem(spec);
    const auto H = lagrangian_hessian(*p, Trajectory(p->layout()), DualTrajectory(p->layout()));
    for (int k = 0; k < 3; ++k) {
      CHECK(H[k](0, 0) == doctest::Approx(12.0));
      CHECK(H[k](1, 1) == doctest::Approx(-2.0));
      CHECK(H[k](0, 1) == 0.0);
    }
    CHECK(H[3](0, 0) == doctest::Approx(16.0));
  }

  SUBCASE("matches finite differences of the gradient") {
    for (const char *family : {"toy", "plate"}) {
      CAPTURE(family);
      std::shared_ptr<ProblemDef> p;
      if (std::string(family) == "toy") {
        p = make_toy_problem(toy_case(3, 4));
      } else {
        PlateSpec ps;
        ps.horizon = 4;
        p = make_plate_problem(ps);
      }
      const auto s = random_point(*p, 21);
      const auto H = lagrangian_hessian(*p, s.z, s.lambda);
      const Matrix fd = oracle::fd_jacobian(
          [&](const Vector &v) {
            return eval_lagrangian_gradient(*p, Trajectory(p->layout(), v), s.lambda).z;
          },
          s.z.data);
      const auto &l = p->layout();
      for (int k = 0; k <= l.horizon; ++k) {
        const int o = l.stage_offset(k), n = l.stage_size(k);
        const Matrix blk = fd.block(o, o, n, n);
        CHECK((H[k] - blk).norm() <= 1e-5 * std::max(1.0, blk.norm()));
      }
    }
  }
}

TEST_CASE("structured products agree with dense matrices") {
  std::mt19937_64 rng(30);
  const auto nd = oracle::random_newton_data(rng, 5, 2, 3);
  const Matrix H = oracle::dense_block_diagonal(5, 2, 3, nd.hessian);
  const Matrix G = oracle::dense_constraint_jacobian(5, 2, 3, nd.jacobian);
  const Vector v = oracle::random_vector(rng, nd.layout.primal_size());
  const Vector w = oracle::random_vector(rng, nd.layout.dual_size());
  CHECK((apply_block_diagonal(nd.layout, nd.hessian, v) - H * v).norm() <= 1e-12 * (H * v).norm());
  CHECK((apply_jacobian(nd.layout, nd.jacobian, v) - G * v).norm() <= 1e-12 * (G * v).norm());
  CHECK((apply_jacobian_transpose(nd.layout, nd.jacobian, w) - G.transpose() * w).norm() <=
        1e-12 * (G.transpose() * w).norm());
}

TEST_CASE("non-finite callback output names the stage") {
  ToySpec spec = toy_case(1, 6);
  spec.reference = [](int k) { return k == 4 ? std::nan("") : 1.0; };
  auto p = make_toy_problem(spec);
  try {
    lagrangian_hessian(*p, Trajectory(p->layout()), DualTrajectory(p->layout()));
    FAIL("expected a numeric error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::numeric);
    CHECK(e.index() == 4);
  }
}

TEST_CASE("dimension mismatch is rejected") {
  auto p = make_toy_problem(toy_case(1, 4));
  const Trajectory wrong(Layout{5, 1, 1});
  CHECK_THROWS_AS(eval_objective(*p, wrong), Error);
}

TEST_CASE("trajectory csv round trip") {
  auto p = make_plate_problem(PlateSpec{.horizon = 3});
  const auto s = random_point(*p, 17, 100.0);
  const auto path = std::filesystem::temp_directory_path() / "fotd_traj_roundtrip.csv";
  write_trajectory_csv(path.string(), s.z, s.lambda);
  const auto back = read_trajectory_csv(path.string(), p->layout());
  CHECK((back.z.data - s.z.data).norm() == 0.0);
  CHECK((back.lambda.data - s.lambda.data).norm() == 0.0);
  std::filesystem::remove(path);
}
