#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>

#include "fotd/nldp.hpp"

namespace fotd {

/// Scalar test problem
///
///   g_k = 2 cos^2(x_k - d_k) + C1 (x_k - d_k)^2 - C2 (u_k - d_k)^2,
///   g_N = C1 x_N^2,  x_{k+1} = x_k + u_k + d_k,  x_0 = 0.
struct ToySpec {
  int horizon = 500;
  double c1 = 8.0;
  double c2 = 1.0;
  std::function<double(int)> reference = [](int) { return 1.0; };
};

/// Preset cases 1-3 (C1, C2, d_k). `horizon` overrides the case's N when
/// positive.
ToySpec toy_case(int which, int horizon = 0);
int toy_case_horizon(int which);
int toy_case_subproblems(int which);

std::shared_ptr<ProblemDef> make_toy_problem(const ToySpec &spec);

/// Heated thin plate on an m x m mesh with zero Dirichlet boundary; the state
/// and control are the temperatures and heat inputs of the interior nodes.
struct PlateSpec {
  int mesh = 4;
  int horizon = 500;
  double hc = 1.0;
  double kappa = 400.0;
  double emissivity = 0.5;
  double sigma = 5.67e-8;
  double ambient = 300.0;
  double thickness = 0.01;
  /// Desired temperature at interior node `node` and time t = k dt.
  std::function<double(int, double)> reference = [](int, double t) { return std::sin(t); };

  double dt() const { return 1.0 / horizon; }
  double dw() const { return 1.0 / (mesh - 1); }
  int interior() const { return (mesh - 2) * (mesh - 2); }
};

std::shared_ptr<ProblemDef> make_plate_problem(const PlateSpec &spec);

/// First initialization is all zeros; the remaining `count - 1` draw every
/// coordinate iid Uniform(-1e5, 1e5) from a generator seeded with `seed`.
/// x_0 is then set to the problem's initial state.
std::vector<PrimalDual> make_initializations(const ProblemDef &p, int count,
                                             std::uint64_t seed);

} // namespace fotd
