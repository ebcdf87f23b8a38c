// Single-bounce multipath geometry in the 2-D plane.
//
// A blocked direct link leaves only reflected paths: transmitter ->
// scatterer -> receive array. Each path is fully described by its angle
// of arrival at the array and its total propagation delay. Given (aoa,
// toa) and both endpoint positions, the scatterer position has a closed
// form: it is the intersection of the arrival ray with the ellipse whose
// foci are the endpoints and whose major axis length is c*toa.
#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace ckmloc {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = 3.14159265358979323846;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Maps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Unit direction for a bearing measured counterclockwise from +x.
inline Point2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Anchor point plus unit direction. Used for the array-anchored arrival
// rays on which single-bounce scatterers must lie.
struct Ray {
  Point2 origin;
  Point2 direction; // unit norm within 1e-12

  Ray(Point2 origin_, Point2 direction_) : origin(origin_), direction(direction_) {
    const double n = norm(direction_);
    if (std::abs(n - 1.0) > 1e-12)
      throw std::invalid_argument("Ray: direction must be a unit vector");
  }
  Ray(Point2 origin_, double angle) : origin(origin_), direction(unit_vector(angle)) {}
};

inline Point2 ray_point(const Ray& ray, double d) {
  if (d < 0.0) throw std::invalid_argument("ray_point: negative distance");
  return ray.origin + d * ray.direction;
}

// One resolvable path: arrival angle in (-pi, pi], delay in seconds,
// optional complex gain (absent for map entries built from geometry alone).
struct PathParam {
  double aoa = 0.0;
  double toa = 0.0;
  std::optional<std::complex<double>> gain;
};

// Path parameters of the single bounce bs -> scatterer -> ue.
inline PathParam forward_path(Point2 bs, Point2 ue, Point2 scatterer) {
  const Point2 to_s = scatterer - bs;
  if (to_s.x == 0.0 && to_s.y == 0.0)
    throw std::invalid_argument("forward_path: scatterer coincides with the base station");
  PathParam p;
  p.aoa = wrap_angle(std::atan2(to_s.y, to_s.x));
  p.toa = (distance(ue, scatterer) + norm(to_s)) / kSpeedOfLight;
  return p;
}

// Inverts forward_path: recovers the scatterer from (aoa, toa) and the
// two endpoints. Relative tolerance for the vanishing-denominator guard;
// entries closer to the singular surface than this are rejected.
inline constexpr double kScattererDenominatorTol = 1e-9;

inline Point2 scatterer_from_path(Point2 bs, Point2 ue, double aoa, double toa) {
  const double range = kSpeedOfLight * toa;
  const Point2 r = ue - bs;
  const double baseline = norm(r);
  const Point2 u = unit_vector(aoa);
  // Collinear boundary: the delay equals the baseline and the ray points
  // at the far endpoint, so every point of the segment is consistent.
  // Convention: the symmetric split.
  if (std::abs(range - baseline) <= 1e-12 * range && dot(r, u) >= baseline * (1.0 - 1e-12))
    return bs + (0.5 * range) * u;
  if (range <= baseline)
    throw std::invalid_argument("scatterer_from_path: delay infeasible (c*toa <= |ue-bs|)");
  const double denom = range - dot(r, u);
  if (std::abs(denom) < kScattererDenominatorTol * range)
    throw std::invalid_argument("scatterer_from_path: ray-ellipse intersection is singular");
  const double d = (range * range - baseline * baseline) / (2.0 * denom);
  if (d < 0.0)
    throw std::invalid_argument("scatterer_from_path: negative ray distance");
  return bs + d * u;
}

// Axis-aligned rectangle, used for deployment regions and map bounds.
struct Rect {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  void validate(const std::string& name) const {
    if (!(xmax >= xmin) || !(ymax >= ymin))
      throw std::invalid_argument(name + ": malformed rectangle");
  }
};

} // namespace ckmloc
