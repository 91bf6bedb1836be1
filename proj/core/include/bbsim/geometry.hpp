#pragma once

#include <cmath>

namespace bbsim {

/// Plain 2-D vector used throughout the case studies.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  /// z-component of the 3-D cross product; sign gives orientation.
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  constexpr double squared_norm() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Rescale v radially so that its norm is at most max_norm. The shrink loop
/// guards against the scaled norm landing one ulp above the bound; the
/// result satisfies norm() <= max_norm under exact comparison.
inline Vec2 clamp_norm(Vec2 v, double max_norm) {
  const double n = v.norm();
  if (n <= max_norm) return v;
  Vec2 scaled = v * (max_norm / n);
  while (scaled.norm() > max_norm) {
    scaled = scaled * (1.0 - 1e-16);
  }
  return scaled;
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * M_PI;
  a = std::fmod(a, two_pi);
  if (a <= -M_PI) a += two_pi;
  if (a > M_PI) a -= two_pi;
  return a;
}

constexpr double deg_to_rad(double d) { return d * M_PI / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / M_PI; }

}  // namespace bbsim
