#pragma once

#include <functional>
#include <string>
#include <vector>

#include "agfem/common.hpp"

namespace agfem {

/// Manufactured Poisson problem: exact solution, gradient and source term,
/// with Dirichlet data evaluated from the exact solution on the whole
/// embedded boundary.
struct ManufacturedSolution {
  std::string name;
  std::function<double(Vec2)> u;
  std::function<Vec2(Vec2)> grad_u;
  std::function<double(Vec2)> f;
};

/// u = a*x + b*y + c (harmonic; reproduced exactly by Q1 spaces).
ManufacturedSolution affine_solution(double a = 2.0, double b = -1.0, double c = 3.0);

/// Corner-singularity benchmark: u = r^(2/3) sin(2 theta / 3) with the polar
/// angle measured in [0, 2*pi) from the positive x axis. Harmonic away from
/// the positive x axis; u lies in H^(1+2/3-eps) when the origin sits on the
/// boundary, which caps uniform-refinement convergence at order 2/3.
ManufacturedSolution fichera_solution();

struct ShockWave {
  double tau = 60.0;  // layer sharpness
  Vec2 center;
  double r0 = 2.5;    // layer radius around the center
};

/// Smooth solution with sharp circular layers:
/// u = sum_i atan(tau_i * (|x - c_i| - r0_i)).
ManufacturedSolution shock_solution(std::vector<ShockWave> waves);

/// Default 2D layer set used by the shock benchmark; all three layers cross
/// a unit-scale disk at the origin.
std::vector<ShockWave> default_shock_waves();

}  // namespace agfem
