#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace agfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm_inf() const { return std::max(std::abs(x), std::abs(y)); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Invalid arguments to an operation (precondition failure).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A structural invariant that must hold by construction was found broken.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& msg) : std::logic_error(msg) {}
};

/// The level set is too poorly resolved by the mesh to proceed.
class DegenerateGeometryError : public std::runtime_error {
 public:
  explicit DegenerateGeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An ill-posed cell could not be attached to any aggregate.
class AggregationError : public std::runtime_error {
 public:
  explicit AggregationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Linear solver breakdown (e.g. indefinite matrix fed to CG).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace agfem
