#include "agfem/level_set.hpp"

#include <cmath>

namespace agfem {

void LevelSet::validate_on(const Vec2& lo, const Vec2& hi, int n) const {
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 p{lo.x + (hi.x - lo.x) * (i + 0.5) / n,
                   lo.y + (hi.y - lo.y) * (j + 0.5) / n};
      if (!std::isfinite((*this)(p))) {
        throw DegenerateGeometryError("level set is not finite on the domain box");
      }
    }
  }
}

LevelSet circle_levelset(Vec2 center, double radius) {
  if (radius <= 0.0) throw ParameterError("circle_levelset: radius must be positive");
  return LevelSet([center, radius](Vec2 x) { return (x - center).norm() - radius; });
}

LevelSet annulus_levelset(Vec2 center, double r_inner, double r_outer) {
  if (!(0.0 < r_inner && r_inner < r_outer)) {
    throw ParameterError("annulus_levelset: need 0 < r_inner < r_outer");
  }
  return LevelSet([center, r_inner, r_outer](Vec2 x) {
    const double r = (x - center).norm();
    return std::max(r - r_outer, r_inner - r);
  });
}

LevelSet pacman_levelset(double wedge_angle, double radius) {
  if (!(wedge_angle > 0.0 && wedge_angle < 2.0 * M_PI)) {
    throw ParameterError("pacman_levelset: wedge angle must be in (0, 2*pi)");
  }
  if (radius <= 0.0) throw ParameterError("pacman_levelset: radius must be positive");
  const double half = 0.5 * wedge_angle;
  // Signed distance-like fields to the two wedge half-planes: s1 > 0 above the
  // lower wedge ray, s2 > 0 below the upper wedge ray. The wedge around the
  // positive x axis is where both are positive (min-combination for openings
  // up to pi, max-combination beyond).
  const double cs = std::cos(half), sn = std::sin(half);
  const bool narrow = wedge_angle <= M_PI;
  return LevelSet([radius, cs, sn, narrow](Vec2 x) {
    const double disk = x.norm() - radius;
    const double s1 = cs * x.y + sn * x.x;   // r*sin(theta + half)
    const double s2 = sn * x.x - cs * x.y;   // r*sin(half - theta)
    const double wedge = narrow ? std::min(s1, s2) : std::max(s1, s2);
    return std::max(disk, wedge);
  });
}

}  // namespace agfem
