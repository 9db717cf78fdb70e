#pragma once

#include <functional>
#include <utility>

#include "agfem/common.hpp"

namespace agfem {

/// Implicit geometry: the physical domain is { x : phi(x) < 0 }. A rigid
/// transform (translation then rotation about the origin) is applied to the
/// geometry before evaluation, i.e. phi_t(x) = phi_base(R(-angle) (x - t)).
class LevelSet {
 public:
  using Field = std::function<double(Vec2)>;

  LevelSet() = default;
  explicit LevelSet(Field phi) : phi_(std::move(phi)) {}

  double operator()(Vec2 x) const {
    if (rotation_ != 0.0 || translation_.x != 0.0 || translation_.y != 0.0) {
      const Vec2 p = x - translation_;
      const double c = std::cos(-rotation_), s = std::sin(-rotation_);
      x = {c * p.x - s * p.y, s * p.x + c * p.y};
    }
    return phi_(x);
  }

  LevelSet translated(Vec2 t) const {
    LevelSet out = *this;
    out.translation_ = out.translation_ + t;
    return out;
  }
  LevelSet rotated(double angle) const {
    LevelSet out = *this;
    out.rotation_ += angle;
    return out;
  }
  Vec2 translation() const { return translation_; }
  double rotation() const { return rotation_; }

  /// Samples an nxn grid over the box and verifies the field is finite
  /// everywhere. Throws DegenerateGeometryError otherwise.
  void validate_on(const Vec2& lo, const Vec2& hi, int n = 256) const;

 private:
  Field phi_;
  Vec2 translation_{0.0, 0.0};
  double rotation_ = 0.0;
};

/// Disk of the given radius: phi = |x - center| - radius.
LevelSet circle_levelset(Vec2 center, double radius);

/// Annulus between the two radii, centered as given.
LevelSet annulus_levelset(Vec2 center, double r_inner, double r_outer);

/// Disk of the given radius centered at the origin with a wedge of the given
/// opening angle removed around the positive x axis. The reentrant corner
/// sits exactly at the origin, where phi = 0.
LevelSet pacman_levelset(double wedge_angle, double radius);

}  // namespace agfem
