#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "contactscan/core/types.hpp"

namespace contactscan::synth
{
/// Vertex farthest along `dir`; ties go to the lower index.
inline Vec3 extreme_vertex(const TriMesh& mesh, const Vec3& dir)
{
  if (mesh.num_vertices() == 0)
  {
    throw std::invalid_argument("empty mesh");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < mesh.num_vertices(); ++i)
  {
    if (mesh.vertices()[i].dot(dir) > mesh.vertices()[best].dot(dir))
    {
      best = i;
    }
  }
  return mesh.vertices()[best];
}

/// Smoothstep disks: 1 within `inner` of a center, 0 beyond `outer`,
/// maximum over centers.
inline ContactMap spot_map(const TriMesh& mesh, const std::vector<Vec3>& centers, double inner,
                           double outer)
{
  if (!(inner >= 0.0 && outer > inner))
  {
    throw std::invalid_argument("spot radii need 0 <= inner < outer");
  }
  std::vector<double> values;
  values.reserve(mesh.num_vertices());
  for (const Vec3& p : mesh.vertices())
  {
    double best = 0.0;
    for (const Vec3& c : centers)
    {
      const double t = std::clamp((outer - (p - c).norm()) / (outer - inner), 0.0, 1.0);
      best = std::max(best, t * t * (3.0 - 2.0 * t));
    }
    values.push_back(best);
  }
  return ContactMap(mesh, std::move(values));
}

/// Spots centered on the extreme vertices along `directions`.
inline ContactMap directional_spots(const TriMesh& mesh, const std::vector<Vec3>& directions,
                                    double inner, double outer)
{
  std::vector<Vec3> centers;
  for (const Vec3& d : directions)
  {
    centers.push_back(extreme_vertex(mesh, d.normalized()));
  }
  return spot_map(mesh, centers, inner, outer);
}
}  // namespace contactscan::synth
