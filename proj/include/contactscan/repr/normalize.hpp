#pragma once

#include <span>
#include <stdexcept>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"

namespace contactscan::repr
{
/// Maps x to (x - center) / scale.
struct UnitCubeFrame
{
  Vec3 center = Vec3::Zero();
  double scale = 1.0;  // m per unit

  Vec3 apply(const Vec3& p) const { return (p - center) / scale; }
  PointList apply(std::span<const Vec3> points) const
  {
    PointList out;
    out.reserve(points.size());
    for (const Vec3& p : points)
    {
      out.push_back(apply(p));
    }
    return out;
  }
};

/// Bounding-box center to the origin, largest extent to 1.
inline UnitCubeFrame unit_cube_frame(std::span<const Vec3> points)
{
  if (points.empty())
  {
    throw std::invalid_argument("cannot normalize an empty point set");
  }
  const AlignedBox box = bounding_box(points);
  const double extent = box.extent().maxCoeff();
  if (!(extent > 0.0))
  {
    throw std::invalid_argument("cannot normalize a point set with zero extent");
  }
  return {box.center(), extent};
}

struct NormalizedPoints
{
  PointList points;
  double scale = 1.0;
  Vec3 center = Vec3::Zero();
};

inline NormalizedPoints normalize_unit_cube(std::span<const Vec3> points)
{
  const UnitCubeFrame f = unit_cube_frame(points);
  return {f.apply(points), f.scale, f.center};
}

inline TriMesh normalize_mesh(const TriMesh& mesh, UnitCubeFrame* frame = nullptr)
{
  const UnitCubeFrame f = unit_cube_frame(mesh.vertices());
  if (frame)
  {
    *frame = f;
  }
  return TriMesh(f.apply(mesh.vertices()), mesh.faces());
}
}  // namespace contactscan::repr
