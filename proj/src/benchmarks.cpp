#include "fotd/benchmarks.hpp"

#include <random>

namespace fotd {

ToySpec toy_case(int which, int horizon) {
  ToySpec s;
  switch (which) {
  case 1:
    s.c1 = 8.0;
    s.c2 = 1.0;
    s.reference = [](int) { return 1.0; };
    break;
  case 2:
    s.c1 = 15.0;
    s.c2 = 3.0;
    s.reference = [](int k) {
      const double v = std::sin(static_cast<double>(k));
      return 100.0 * v * v;
    };
    break;
  case 3:
    s.c1 = 12.0;
    s.c2 = 2.0;
    s.reference = [](int k) { return 5.0 * std::sin(static_cast<double>(k)); };
    break;
  default:
    throw_invalid("toy case must be 1, 2 or 3 (got " + std::to_string(which) + ")");
  }
  s.horizon = horizon > 0 ? horizon : toy_case_horizon(which);
  return s;
}

int toy_case_horizon(int which) {
  if (which < 1 || which > 3) throw_invalid("toy case must be 1, 2 or 3");
  return which == 3 ? 10000 : 5000;
}

int toy_case_subproblems(int which) {
  if (which < 1 || which > 3) throw_invalid("toy case must be 1, 2 or 3");
  return which == 1 ? 50 : 100;
}

std::shared_ptr<ProblemDef> make_toy_problem(const ToySpec &spec) {
  if (spec.horizon < 2) throw_invalid("toy problem needs N >= 2");
  if (!spec.reference) throw_invalid("toy problem needs a reference function");
  const double c1 = spec.c1, c2 = spec.c2;
  const int N = spec.horizon;
  // Tabulate d_k once so callbacks stay cheap and thread-safe.
  auto d = std::make_shared<std::vector<double>>(N + 1);
  for (int k = 0; k <= N; ++k) (*d)[k] = spec.reference(k);

  ProblemCallbacks cb;
  cb.cost = [=](int k, const Vector &x, const Vector &u) {
    if (k == N) return c1 * x[0] * x[0];
    const double e = x[0] - (*d)[k], v = u[0] - (*d)[k], c = std::cos(e);
    return 2.0 * c * c + c1 * e * e - c2 * v * v;
  };
  cb.cost_gradient = [=](int k, const Vector &x, const Vector &u) -> Vector {
    if (k == N) return Vector::Constant(1, 2.0 * c1 * x[0]);
    const double e = x[0] - (*d)[k], v = u[0] - (*d)[k];
    Vector g(2);
    g << -2.0 * std::sin(2.0 * e) + 2.0 * c1 * e, -2.0 * c2 * v;
    return g;
  };
  cb.cost_hessian = [=](int k, const Vector &x, const Vector &) -> Matrix {
    if (k == N) return Matrix::Constant(1, 1, 2.0 * c1);
    const double e = x[0] - (*d)[k];
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = -4.0 * std::cos(2.0 * e) + 2.0 * c1;
    h(1, 1) = -2.0 * c2;
    return h;
  };
  cb.dynamics = [=](int k, const Vector &x, const Vector &u) -> Vector {
    return Vector::Constant(1, x[0] + u[0] + (*d)[k]);
  };
  cb.dynamics_jacobian = [](int, const Vector &, const Vector &) -> Matrix {
    return Matrix::Ones(1, 2);
  };
  cb.dynamics_hessian_contraction = [](int, const Vector &, const Vector &,
                                       const Vector &) -> Matrix {
    return Matrix::Zero(2, 2);
  };

  auto p = std::make_shared<ProblemDef>(N, 1, 1, Vector::Zero(1), std::move(cb));
  if (c1 - 2.0 <= 4.0 * std::abs(c2))
    p->add_warning("convexity margin C1 - 2 > 4|C2| is violated; Hessian modification may "
                   "be needed");
  return p;
}

std::shared_ptr<ProblemDef> make_plate_problem(const PlateSpec &spec) {
  if (spec.mesh < 3) throw_invalid("plate mesh must be at least 3 x 3");
  if (spec.horizon < 1) throw_invalid("plate horizon must be positive");
  if (!(spec.kappa > 0.0) || !(spec.thickness > 0.0) || !(spec.sigma >= 0.0) ||
      !(spec.hc >= 0.0) || !(spec.emissivity >= 0.0))
    throw_invalid("plate constants must be positive (hc and emissivity may be zero)");
  if (!spec.reference) throw_invalid("plate problem needs a reference function");

  const int side = spec.mesh - 2, n = spec.interior(), N = spec.horizon;
  const double dt = spec.dt(), dw = spec.dw();
  const double a = 2.0 * spec.hc / (spec.kappa * spec.thickness);
  const double r = 2.0 * spec.emissivity * spec.sigma / (spec.kappa * spec.thickness);
  const double Tc = spec.ambient, Tc4 = Tc * Tc * Tc * Tc;
  const double w = dt * dw * dw;

  auto lap = std::make_shared<Matrix>(Matrix::Zero(n, n));
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const int p = i * side + j;
      (*lap)(p, p) = -4.0 / (dw * dw);
      if (i > 0) (*lap)(p, p - side) = 1.0 / (dw * dw);
      if (i + 1 < side) (*lap)(p, p + side) = 1.0 / (dw * dw);
      if (j > 0) (*lap)(p, p - 1) = 1.0 / (dw * dw);
      if (j + 1 < side) (*lap)(p, p + 1) = 1.0 / (dw * dw);
    }
  auto ref = std::make_shared<Matrix>(n, N + 1);
  for (int k = 0; k <= N; ++k)
    for (int p = 0; p < n; ++p) (*ref)(p, k) = spec.reference(p, k * dt);

  ProblemCallbacks cb;
  cb.cost = [=](int k, const Vector &x, const Vector &u) {
    const double track = (x - ref->col(k)).squaredNorm();
    return k == N ? w * track : w * (track + u.squaredNorm());
  };
  cb.cost_gradient = [=](int k, const Vector &x, const Vector &u) -> Vector {
    if (k == N) return 2.0 * w * (x - ref->col(k));
    Vector g(2 * n);
    g << 2.0 * w * (x - ref->col(k)), 2.0 * w * u;
    return g;
  };
  cb.cost_hessian = [=](int k, const Vector &, const Vector &) -> Matrix {
    const int size = k == N ? n : 2 * n;
    return Matrix::Identity(size, size) * (2.0 * w);
  };
  cb.dynamics = [=](int, const Vector &x, const Vector &u) -> Vector {
    const Vector x4 = x.array().pow(4).matrix();
    return x + dt * (*lap * x + u + a * (Vector::Constant(n, Tc) - x) +
                     r * (Vector::Constant(n, Tc4) - x4));
  };
  cb.dynamics_jacobian = [=](int, const Vector &x, const Vector &) -> Matrix {
    Matrix J(n, 2 * n);
    J.leftCols(n) = Matrix::Identity(n, n) + dt * *lap;
    J.leftCols(n).diagonal().array() -= dt * (a + 4.0 * r * x.array().cube());
    J.rightCols(n) = dt * Matrix::Identity(n, n);
    return J;
  };
  cb.dynamics_hessian_contraction = [=](int, const Vector &x, const Vector &,
                                        const Vector &l) -> Matrix {
    Matrix h = Matrix::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n).diagonal() = (12.0 * dt * r) * (l.array() * x.array().square()).matrix();
    return h;
  };

  auto p = std::make_shared<ProblemDef>(N, n, n, Vector::Zero(n), std::move(cb));
  if (dt * 4.0 / (dw * dw) >= 2.0)
    p->add_warning("explicit Euler step is unstable: dt * 4 / dw^2 = " +
                   std::to_string(dt * 4.0 / (dw * dw)) + " >= 2");
  return p;
}

std::vector<PrimalDual> make_initializations(const ProblemDef &p, int count,
                                             std::uint64_t seed) {
  if (count < 1) throw_invalid("initialization count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1e5, 1e5);
  std::vector<PrimalDual> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    PrimalDual s{Trajectory(p.layout()), DualTrajectory(p.layout())};
    if (i > 0) {
      for (auto &v : s.z.data) v = uniform(rng);
      for (auto &v : s.lambda.data) v = uniform(rng);
    }
    s.z.x(0) = p.initial_state();
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace fotd
