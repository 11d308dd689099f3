#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"

// Procedural test shapes. All are centered at the object origin with +z up
// and outward-facing (counter-clockwise) triangles.
namespace contactscan::primitives
{
namespace detail
{
struct Builder
{
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::uint32_t add(const Vec3& v)
  {
    vertices.push_back(v);
    return static_cast<std::uint32_t>(vertices.size() - 1);
  }
  void tri(std::uint32_t a, std::uint32_t b, std::uint32_t c) { faces.push_back({a, b, c}); }
  // Quad a-b-c-d in counter-clockwise order.
  void quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d)
  {
    tri(a, b, c);
    tri(a, c, d);
  }
};

inline double weld_tolerance(double size) { return size * 1e-9; }
}  // namespace detail

/// Axis-aligned box with `subdivisions` cells along each edge of every face.
inline TriMesh make_box(const Vec3& size, int subdivisions = 1)
{
  if (subdivisions < 1 || (size.array() <= 0.0).any())
  {
    throw std::invalid_argument("invalid box parameters");
  }
  detail::Builder b;
  const Vec3 h = 0.5 * size;
  // For each face: normal axis, sign; (u, v) axes chosen so u x v = normal.
  for (int axis = 0; axis < 3; ++axis)
  {
    for (const double sign : {-1.0, 1.0})
    {
      const int ua = (axis + 1) % 3;
      const int va = (axis + 2) % 3;
      const std::uint32_t base = static_cast<std::uint32_t>(b.vertices.size());
      const int n = subdivisions;
      for (int j = 0; j <= n; ++j)
      {
        for (int i = 0; i <= n; ++i)
        {
          Vec3 p;
          p[axis] = sign * h[axis];
          p[ua] = -h[ua] + size[ua] * i / n;
          p[va] = -h[va] + size[va] * j / n;
          b.add(p);
        }
      }
      auto id = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (n + 1) + i); };
      for (int j = 0; j < n; ++j)
      {
        for (int i = 0; i < n; ++i)
        {
          if (sign > 0)
          {
            b.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
          }
          else
          {
            b.quad(id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
          }
        }
      }
    }
  }
  return weld_vertices(b.vertices, b.faces, detail::weld_tolerance(size.maxCoeff()));
}

inline TriMesh make_cube(double side, int subdivisions = 1)
{
  return make_box(Vec3::Constant(side), subdivisions);
}

/// Icosphere: 10 * 4^level + 2 vertices.
inline TriMesh make_icosphere(double radius, int level)
{
  if (radius <= 0.0 || level < 0)
  {
    throw std::invalid_argument("invalid icosphere parameters");
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v)
  {
    p.normalize();
  }
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l)
  {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end())
      {
        return it->second;
      }
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& tri : f)
    {
      const auto a = mid(tri[0], tri[1]);
      const auto b = mid(tri[1], tri[2]);
      const auto c = mid(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (Vec3& p : v)
  {
    p *= radius;
  }
  return TriMesh(std::move(v), std::move(f));
}

/// Closed cylinder along z, centered at the origin.
inline TriMesh make_cylinder(double radius, double height, int segments, int rings,
                             int cap_rings)
{
  if (radius <= 0.0 || height <= 0.0 || segments < 3 || rings < 1 || cap_rings < 1)
  {
    throw std::invalid_argument("invalid cylinder parameters");
  }
  detail::Builder b;
  const double two_pi = 2.0 * std::numbers::pi;
  auto ring_point = [&](double r, int s, double z) {
    const double a = two_pi * s / segments;
    return Vec3(r * std::cos(a), r * std::sin(a), z);
  };
  // Side wall.
  const std::uint32_t side = static_cast<std::uint32_t>(b.vertices.size());
  for (int k = 0; k <= rings; ++k)
  {
    for (int s = 0; s < segments; ++s)
    {
      b.add(ring_point(radius, s, -0.5 * height + height * k / rings));
    }
  }
  auto sid = [&](int s, int k) {
    return side + static_cast<std::uint32_t>(k * segments + (s % segments));
  };
  for (int k = 0; k < rings; ++k)
  {
    for (int s = 0; s < segments; ++s)
    {
      b.quad(sid(s, k), sid(s + 1, k), sid(s + 1, k + 1), sid(s, k + 1));
    }
  }
  // Caps: concentric rings around a center vertex.
  for (const double sign : {-1.0, 1.0})
  {
    const double z = sign * 0.5 * height;
    const std::uint32_t center = b.add(Vec3(0, 0, z));
    const std::uint32_t base = static_cast<std::uint32_t>(b.vertices.size());
    for (int k = 1; k <= cap_rings; ++k)
    {
      for (int s = 0; s < segments; ++s)
      {
        b.add(ring_point(radius * k / cap_rings, s, z));
      }
    }
    auto cid = [&](int s, int k) {
      return base + static_cast<std::uint32_t>((k - 1) * segments + (s % segments));
    };
    for (int s = 0; s < segments; ++s)
    {
      if (sign > 0)
      {
        b.tri(center, cid(s, 1), cid(s + 1, 1));
      }
      else
      {
        b.tri(center, cid(s + 1, 1), cid(s, 1));
      }
    }
    for (int k = 1; k < cap_rings; ++k)
    {
      for (int s = 0; s < segments; ++s)
      {
        if (sign > 0)
        {
          b.quad(cid(s, k), cid(s, k + 1), cid(s + 1, k + 1), cid(s + 1, k));
        }
        else
        {
          b.quad(cid(s, k), cid(s + 1, k), cid(s + 1, k + 1), cid(s, k + 1));
        }
      }
    }
  }
  return weld_vertices(b.vertices, b.faces, detail::weld_tolerance(std::max(radius, height)));
}

/// Torus around the z axis with tube centers at `major` and tube radius `minor`.
inline TriMesh make_torus(double major, double minor, int major_segments, int minor_segments)
{
  if (major <= minor || minor <= 0.0 || major_segments < 3 || minor_segments < 3)
  {
    throw std::invalid_argument("invalid torus parameters");
  }
  detail::Builder b;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < major_segments; ++i)
  {
    const double u = two_pi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j)
    {
      const double v = two_pi * j / minor_segments;
      const double r = major + minor * std::cos(v);
      b.add(Vec3(r * std::cos(u), r * std::sin(u), minor * std::sin(v)));
    }
  }
  auto id = [&](int i, int j) {
    return static_cast<std::uint32_t>((i % major_segments) * minor_segments +
                                      (j % minor_segments));
  };
  for (int i = 0; i < major_segments; ++i)
  {
    for (int j = 0; j < minor_segments; ++j)
    {
      b.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  return TriMesh(std::move(b.vertices), std::move(b.faces));
}

/// Flat rectangle in the z = 0 plane facing +z.
inline TriMesh make_plane_grid(double size_x, double size_y, int nx, int ny)
{
  if (size_x <= 0.0 || size_y <= 0.0 || nx < 1 || ny < 1)
  {
    throw std::invalid_argument("invalid plane parameters");
  }
  detail::Builder b;
  for (int j = 0; j <= ny; ++j)
  {
    for (int i = 0; i <= nx; ++i)
    {
      b.add(Vec3(-0.5 * size_x + size_x * i / nx, -0.5 * size_y + size_y * j / ny, 0.0));
    }
  }
  auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * (nx + 1) + i); };
  for (int j = 0; j < ny; ++j)
  {
    for (int i = 0; i < nx; ++i)
    {
      b.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  return TriMesh(std::move(b.vertices), std::move(b.faces));
}

/// Concatenates meshes without welding.
inline TriMesh merge(const std::vector<TriMesh>& parts)
{
  std::vector<Vec3> v;
  std::vector<Face> f;
  for (const TriMesh& m : parts)
  {
    const auto base = static_cast<std::uint32_t>(v.size());
    v.insert(v.end(), m.vertices().begin(), m.vertices().end());
    for (const Face& t : m.faces())
    {
      f.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
  }
  return TriMesh(std::move(v), std::move(f));
}

/// Closed cylindrical body with a ring handle on the +x side. The handle is a
/// separate shell that overlaps the body wall.
inline TriMesh make_mug(double radius, double height, double vertices_per_m2)
{
  const double handle_major = 0.3 * height;
  const double handle_minor = 0.07 * height;
  const double spacing = 1.0 / std::sqrt(vertices_per_m2);
  const int segments = std::max(8, static_cast<int>(std::ceil(2 * std::numbers::pi * radius / spacing)));
  const int rings = std::max(1, static_cast<int>(std::ceil(height / spacing)));
  const int cap_rings = std::max(1, static_cast<int>(std::ceil(radius / spacing)));
  TriMesh body = make_cylinder(radius, height, segments, rings, cap_rings);
  const int hu = std::max(8, static_cast<int>(std::ceil(2 * std::numbers::pi * handle_major / spacing)));
  const int hv = std::max(6, static_cast<int>(std::ceil(2 * std::numbers::pi * handle_minor / spacing)));
  const TriMesh ring = make_torus(handle_major, handle_minor, hu, hv);
  // Stand the ring up in the xz plane and move it onto the wall.
  const RigidPose place = RigidPose::from_axis_angle(Vec3::UnitX(), std::numbers::pi / 2.0,
                                                     Vec3(radius, 0.0, 0.0));
  return merge({body, transform_mesh(ring, place)});
}

/// Shapes used by the synthetic cohort, sized inside the 4-12 cm range.
/// `vertices_per_cm2` controls tessellation density.
inline TriMesh make_named(const std::string& name, double vertices_per_cm2 = 64.0)
{
  const double per_m2 = vertices_per_cm2 * 1e4;
  const double spacing = 1.0 / std::sqrt(per_m2);
  if (name == "cube")
  {
    const double side = 0.06;
    return make_cube(side, std::max(1, static_cast<int>(std::ceil(side / spacing))));
  }
  if (name == "box")
  {
    const Vec3 size(0.08, 0.06, 0.04);
    return make_box(size, std::max(1, static_cast<int>(std::ceil(size.maxCoeff() / spacing))));
  }
  if (name == "sphere")
  {
    const double r = 0.035;
    const double area_cm2 = 4 * std::numbers::pi * r * r * 1e4;
    int level = 0;
    while (10.0 * std::pow(4.0, level) + 2 < 0.8 * vertices_per_cm2 * area_cm2 && level < 7)
    {
      ++level;
    }
    return make_icosphere(r, level);
  }
  if (name == "cylinder")
  {
    const double r = 0.03;
    const double h = 0.08;
    return make_cylinder(r, h,
                         std::max(8, static_cast<int>(std::ceil(2 * std::numbers::pi * r / spacing))),
                         std::max(1, static_cast<int>(std::ceil(h / spacing))),
                         std::max(1, static_cast<int>(std::ceil(r / spacing))));
  }
  if (name == "torus")
  {
    const double major = 0.04;
    const double minor = 0.015;
    return make_torus(major, minor,
                      std::max(8, static_cast<int>(std::ceil(2 * std::numbers::pi * (major + minor) / spacing))),
                      std::max(6, static_cast<int>(std::ceil(2 * std::numbers::pi * minor / spacing))));
  }
  if (name == "mug")
  {
    return make_mug(0.035, 0.09, per_m2);
  }
  throw std::invalid_argument("unknown primitive '" + name + "'");
}
}  // namespace contactscan::primitives
