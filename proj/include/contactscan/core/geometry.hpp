#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "contactscan/core/types.hpp"

namespace contactscan
{
inline double surface_area(const TriMesh& mesh)
{
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
  {
    total += mesh.face_area(f);
  }
  return total;
}

inline PointList transform_points(std::span<const Vec3> points, const RigidPose& pose)
{
  PointList out;
  out.reserve(points.size());
  for (const Vec3& p : points)
  {
    out.push_back(pose.apply(p));
  }
  return out;
}

/// Applies a pose to every vertex; faces are kept.
inline TriMesh transform_mesh(const TriMesh& mesh, const RigidPose& pose)
{
  return TriMesh(transform_points(mesh.vertices(), pose), mesh.faces());
}

/// Lumped (barycentric) vertex areas: one third of each incident face.
inline std::vector<double> vertex_areas(const TriMesh& mesh)
{
  std::vector<double> areas(mesh.num_vertices(), 0.0);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
  {
    const double a = mesh.face_area(f) / 3.0;
    for (const auto idx : mesh.faces()[f])
    {
      areas[idx] += a;
    }
  }
  return areas;
}

struct AlignedBox
{
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p)
  {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool valid() const { return (max.array() >= min.array()).all(); }
};

inline AlignedBox bounding_box(std::span<const Vec3> points)
{
  AlignedBox box;
  for (const Vec3& p : points)
  {
    box.extend(p);
  }
  return box;
}

inline Vec3 centroid(std::span<const Vec3> points)
{
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : points)
  {
    c += p;
  }
  return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
}

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection).
/// Also returns barycentric weights of the closest point.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c, Vec3* bary = nullptr)
{
  auto set = [&](double u, double v, double w) {
    if (bary)
    {
      *bary = Vec3(u, v, w);
    }
    return Vec3(u * a + v * b + w * c);
  };
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0)
  {
    return set(1, 0, 0);
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3)
  {
    return set(0, 1, 0);
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
  {
    const double v = d1 / (d1 - d3);
    return set(1 - v, v, 0);
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6)
  {
    return set(0, 0, 1);
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
  {
    const double w = d2 / (d2 - d6);
    return set(1 - w, 0, w);
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
  {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return set(0, 1 - w, w);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return set(1 - v - w, v, w);
}

/// Face indices incident to each vertex.
inline std::vector<std::vector<std::uint32_t>> vertex_faces(const TriMesh& mesh)
{
  std::vector<std::vector<std::uint32_t>> out(mesh.num_vertices());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
  {
    for (const auto idx : mesh.faces()[f])
    {
      out[idx].push_back(static_cast<std::uint32_t>(f));
    }
  }
  return out;
}

/// True when every undirected edge is shared by exactly two faces.
inline bool is_closed_manifold(const TriMesh& mesh)
{
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_count;
  for (const Face& f : mesh.faces())
  {
    for (int e = 0; e < 3; ++e)
    {
      auto a = f[e];
      auto b = f[(e + 1) % 3];
      if (a > b)
      {
        std::swap(a, b);
      }
      ++edge_count[{a, b}];
    }
  }
  return std::all_of(edge_count.begin(), edge_count.end(),
                     [](const auto& kv) { return kv.second == 2; });
}

/// Merges vertices that coincide within `tolerance` and remaps faces.
inline TriMesh weld_vertices(const std::vector<Vec3>& vertices,
                             const std::vector<Face>& faces, double tolerance)
{
  using Key = std::array<long long, 3>;
  std::map<Key, std::uint32_t> index;
  std::vector<Vec3> merged;
  std::vector<std::uint32_t> remap(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i)
  {
    const Key key{std::llround(vertices[i].x() / tolerance),
                  std::llround(vertices[i].y() / tolerance),
                  std::llround(vertices[i].z() / tolerance)};
    auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(merged.size()));
    if (inserted)
    {
      merged.push_back(vertices[i]);
    }
    remap[i] = it->second;
  }
  std::vector<Face> out_faces;
  out_faces.reserve(faces.size());
  for (const Face& f : faces)
  {
    out_faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
  }
  return TriMesh(std::move(merged), std::move(out_faces));
}
}  // namespace contactscan
