#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace edgewbc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecXi = Eigen::VectorXi;

// Planar (x, z) helpers. Angles rotate counter-clockwise in the x-z plane;
// "pitch" is the scalar orientation of a frame.
inline Mat2 rot2(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// 90-degree CCW rotation: d/da [rot2(a) v] = perp(rot2(a) v).
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

// Planar cross product (moment of force f applied at lever r).
inline double cross2(const Vec2& r, const Vec2& f) { return r.x() * f.y() - r.y() * f.x(); }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};
struct UnknownFrame : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
// Cached decomposition belongs to a different contact mode than requested.
struct ModeMismatch : Error {
  using Error::Error;
};
struct InfeasibleProblem : Error {
  using Error::Error;
};
struct SolverStalled : Error {
  using Error::Error;
};
// A serialized factorization blob is malformed (bad magic, truncation,
// inconsistent header, trailing bytes).
struct SerializationError : Error {
  using Error::Error;
};
struct PlanError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
// Carries a 1-based line number for file parse failures.
struct ParseError : Error {
  ParseError(const std::string& msg, int line_arg) : Error(msg), line(line_arg) {}
  int line = 0;
};

}  // namespace edgewbc
