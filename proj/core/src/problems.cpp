#include "agfem/problems.hpp"

#include <cmath>

namespace agfem {

ManufacturedSolution affine_solution(double a, double b, double c) {
  ManufacturedSolution s;
  s.name = "affine";
  s.u = [a, b, c](Vec2 p) { return a * p.x + b * p.y + c; };
  s.grad_u = [a, b](Vec2) { return Vec2{a, b}; };
  s.f = [](Vec2) { return 0.0; };
  return s;
}

ManufacturedSolution fichera_solution() {
  constexpr double alpha = 2.0 / 3.0;
  auto theta_of = [](Vec2 p) {
    double t = std::atan2(p.y, p.x);
    if (t < 0.0) t += 2.0 * M_PI;
    return t;
  };
  ManufacturedSolution s;
  s.name = "fichera";
  s.u = [theta_of](Vec2 p) {
    const double r = p.norm();
    if (r < 1e-14) return 0.0;  // continuous limit at the corner
    return std::pow(r, alpha) * std::sin(alpha * theta_of(p));
  };
  s.grad_u = [theta_of](Vec2 p) {
    const double r = p.norm();
    if (r < 1e-14) return Vec2{0.0, 0.0};
    const double t = theta_of(p);
    const double m = alpha * std::pow(r, alpha - 1.0);
    return Vec2{m * std::sin((alpha - 1.0) * t), m * std::cos((alpha - 1.0) * t)};
  };
  s.f = [](Vec2) { return 0.0; };
  return s;
}

ManufacturedSolution shock_solution(std::vector<ShockWave> waves) {
  ManufacturedSolution s;
  s.name = "shock2d";
  s.u = [waves](Vec2 p) {
    double v = 0.0;
    for (const ShockWave& w : waves) {
      v += std::atan(w.tau * ((p - w.center).norm() - w.r0));
    }
    return v;
  };
  s.grad_u = [waves](Vec2 p) {
    Vec2 g{0.0, 0.0};
    for (const ShockWave& w : waves) {
      const Vec2 d = p - w.center;
      const double r = d.norm();
      if (r < 1e-14) continue;
      const double arg = w.tau * (r - w.r0);
      const double dr = w.tau / (1.0 + arg * arg);
      g = g + d * (dr / r);
    }
    return g;
  };
  s.f = [waves](Vec2 p) {
    // -laplacian of atan(tau*(r - r0)) in 2D:
    //   d2u/dr2 = -2 tau^2 s / (1 + s^2)^2,  du/dr / r = tau / (r (1 + s^2)).
    double v = 0.0;
    for (const ShockWave& w : waves) {
      const double r = (p - w.center).norm();
      if (r < 1e-14) continue;
      const double arg = w.tau * (r - w.r0);
      const double den = 1.0 + arg * arg;
      v += 2.0 * w.tau * w.tau * arg / (den * den) - w.tau / (r * den);
    }
    return v;
  };
  return s;
}

std::vector<ShockWave> default_shock_waves() {
  return {{60.0, {-1.0, -2.0}, 2.5}, {80.0, {1.0, 1.0}, 1.75}, {120.0, {0.5, -3.0}, 3.3}};
}

}  // namespace agfem
