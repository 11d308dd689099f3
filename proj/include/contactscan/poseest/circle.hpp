#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/poseest/plane.hpp"

namespace contactscan::poseest
{
struct Circle3D
{
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  Vec3 normal = Vec3::UnitZ();

  /// In-plane basis (u, w) with w = normal x u.
  std::pair<Vec3, Vec3> basis() const
  {
    Vec3 ref = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = (ref - normal * normal.dot(ref)).normalized();
    return {u, normal.cross(u)};
  }

  Vec3 point_at(double phase) const
  {
    const auto [u, w] = basis();
    return center + radius * (std::cos(phase) * u + std::sin(phase) * w);
  }

  double phase_of(const Vec3& p) const
  {
    const auto [u, w] = basis();
    const Vec3 d = p - center;
    return std::atan2(w.dot(d), u.dot(d));
  }

  double distance(const Vec3& p) const
  {
    const Vec3 d = p - center;
    const double h = normal.dot(d);
    const double radial = (d - h * normal).norm();
    return std::hypot(h, radial - radius);
  }
};

/// Plane fit, projection into the plane, algebraic (Kasa) circle fit, lift.
/// The normal is oriented so the input sequence circulates counter-clockwise
/// about it.
inline Circle3D fit_circle3d(std::span<const Vec3> origins)
{
  if (origins.size() < 3)
  {
    throw std::invalid_argument("circle fit needs at least 3 points");
  }
  const Plane plane = fit_plane(origins);
  const Vec3 c0 = centroid(origins);
  Circle3D circle;
  circle.normal = plane.normal;
  const auto [u, w] = circle.basis();
  const auto n = static_cast<Eigen::Index>(origins.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  double spread = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
  {
    const Vec3 d = origins[static_cast<std::size_t>(i)] - c0;
    const double x = u.dot(d);
    const double y = w.dot(d);
    a(i, 0) = 2.0 * x;
    a(i, 1) = 2.0 * y;
    a(i, 2) = 1.0;
    b(i) = x * x + y * y;
    spread = std::max(spread, std::sqrt(b(i)));
  }
  if (spread < 1e-6)
  {
    throw std::invalid_argument("circle fit points are coincident");
  }
  const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
  const double r2 = s(2) + s(0) * s(0) + s(1) * s(1);
  if (!(r2 > 0.0) || !std::isfinite(r2))
  {
    throw std::invalid_argument("degenerate circle fit");
  }
  circle.center = c0 + s(0) * u + s(1) * w;
  circle.radius = std::sqrt(r2);
  double circulation = 0.0;
  for (std::size_t i = 0; i + 1 < origins.size(); ++i)
  {
    circulation +=
        circle.normal.dot((origins[i] - circle.center).cross(origins[i + 1] - circle.center));
  }
  if (circulation < 0.0)
  {
    circle.normal = -circle.normal;
  }
  return circle;
}
}  // namespace contactscan::poseest
