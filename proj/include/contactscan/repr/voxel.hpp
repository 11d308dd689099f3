#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "contactscan/core/types.hpp"
#include "contactscan/util/parallel.hpp"

namespace contactscan::repr
{
/// Cubic grid; voxel (i, j, k) spans origin + [i, i+1] * size along each axis.
struct VoxelGrid
{
  int res = 0;
  Vec3 origin = Vec3::Zero();
  double size = 0.0;
  std::vector<std::uint8_t> cells;  // x fastest, then y, then z

  static VoxelGrid unit_cube(int res)
  {
    if (res < 1)
    {
      throw std::invalid_argument("grid resolution must be positive");
    }
    VoxelGrid g;
    g.res = res;
    g.origin = Vec3::Constant(-0.5);
    g.size = 1.0 / res;
    g.cells.assign(static_cast<std::size_t>(res) * res * res, 0);
    return g;
  }

  std::size_t index(int i, int j, int k) const
  {
    return (static_cast<std::size_t>(k) * res + j) * res + i;
  }
  bool in_bounds(int i, int j, int k) const
  {
    return i >= 0 && j >= 0 && k >= 0 && i < res && j < res && k < res;
  }
  bool at(int i, int j, int k) const { return cells[index(i, j, k)] != 0; }
  Vec3 center(int i, int j, int k) const
  {
    return origin + size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  std::array<int, 3> coords(std::size_t idx) const
  {
    const auto r = static_cast<std::size_t>(res);
    return {static_cast<int>(idx % r), static_cast<int>((idx / r) % r), static_cast<int>(idx / (r * r))};
  }
  /// Voxel containing p, clamped into the grid.
  std::array<int, 3> locate(const Vec3& p) const
  {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a)
    {
      c[a] = std::clamp(static_cast<int>(std::floor((p[a] - origin[a]) / size)), 0, res - 1);
    }
    return c;
  }
  std::size_t count() const
  {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
  }
};

/// Coordinate along `axis` where the axis-parallel line through p meets the
/// triangle, edges inclusive. Empty for misses and triangles parallel to the
/// axis.
inline std::optional<double> axis_line_crossing(const Vec3& p, int axis, const Vec3& a, const Vec3& b,
                                                const Vec3& c)
{
  const int u = (axis + 1) % 3;
  const int v = (axis + 2) % 3;
  const double area = (b[u] - a[u]) * (c[v] - a[v]) - (c[u] - a[u]) * (b[v] - a[v]);
  const double scale = std::max({std::abs(b[u] - a[u]), std::abs(c[u] - a[u]), std::abs(b[v] - a[v]),
                                 std::abs(c[v] - a[v])});
  if (std::abs(area) <= 1e-14 * scale * scale)
  {
    return std::nullopt;
  }
  // Signed sub-areas opposite each corner.
  const double wa = (b[u] - p[u]) * (c[v] - p[v]) - (c[u] - p[u]) * (b[v] - p[v]);
  const double wb = (c[u] - p[u]) * (a[v] - p[v]) - (a[u] - p[u]) * (c[v] - p[v]);
  const double wc = (a[u] - p[u]) * (b[v] - p[v]) - (b[u] - p[u]) * (a[v] - p[v]);
  const double tol = 1e-12 * std::abs(area);
  const bool inside = area > 0.0 ? (wa >= -tol && wb >= -tol && wc >= -tol)
                                 : (wa <= tol && wb <= tol && wc <= tol);
  if (!inside)
  {
    return std::nullopt;
  }
  return a[axis] + (wb * (b[axis] - a[axis]) + wc * (c[axis] - a[axis])) / area;
}

/// Marks surface voxels. Every step between face-adjacent voxel centers
/// [c_p, c_p+1) that meets a triangle marks one of its two voxels: the one
/// behind the triangle (against its normal), or the in-grid one at the grid
/// border. A 6-connected walk through unmarked voxels therefore never crosses
/// the surface. For closed, outward-oriented meshes the marked voxels are the
/// inside voxels next to the outside.
/// Parallel over z slabs; each slab only writes its own cells.
inline void rasterize_surface(const TriMesh& mesh, VoxelGrid& grid, unsigned threads = 1)
{
  const int res = grid.res;
  std::vector<std::vector<std::uint32_t>> slabs(static_cast<std::size_t>(res));
  std::vector<std::array<int, 6>> ranges(mesh.num_faces());
  std::vector<Vec3> normals(mesh.num_faces());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
  {
    const Face& t = mesh.faces()[f];
    const Vec3& a = mesh.vertices()[t[0]];
    const Vec3& b = mesh.vertices()[t[1]];
    const Vec3& c = mesh.vertices()[t[2]];
    normals[f] = (b - a).cross(c - a);
    std::array<int, 6> r{};
    for (int ax = 0; ax < 3; ++ax)
    {
      const double lo = std::min({a[ax], b[ax], c[ax]});
      const double hi = std::max({a[ax], b[ax], c[ax]});
      r[2 * ax] = std::max(0, static_cast<int>(std::floor((lo - grid.origin[ax]) / grid.size - 0.5)) - 1);
      r[2 * ax + 1] = std::min(res - 1, static_cast<int>(std::floor((hi - grid.origin[ax]) / grid.size - 0.5)) + 2);
    }
    ranges[f] = r;
    for (int k = r[4]; k <= r[5]; ++k)
    {
      slabs[static_cast<std::size_t>(k)].push_back(static_cast<std::uint32_t>(f));
    }
  }
  util::parallel_for(0, static_cast<std::size_t>(res), threads, [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (const auto f : slabs[kk])
    {
      const Face& t = mesh.faces()[f];
      const Vec3& a = mesh.vertices()[t[0]];
      const Vec3& b = mesh.vertices()[t[1]];
      const Vec3& c = mesh.vertices()[t[2]];
      const Vec3& n = normals[f];
      const auto& r = ranges[f];
      for (int j = r[2]; j <= r[3]; ++j)
      {
        for (int i = r[0]; i <= r[1]; ++i)
        {
          std::uint8_t& cell = grid.cells[grid.index(i, j, k)];
          if (cell)
          {
            continue;
          }
          const std::array<int, 3> q{i, j, k};
          const Vec3 center = grid.center(i, j, k);
          for (int axis = 0; axis < 3 && !cell; ++axis)
          {
            const auto h = axis_line_crossing(center, axis, a, b, c);
            if (!h)
            {
              continue;
            }
            const double below = grid.origin[axis] + grid.size * (q[axis] - 0.5);
            const double above = grid.origin[axis] + grid.size * (q[axis] + 1.5);
            // Step to the next voxel, this one as the lower end.
            if (*h >= center[axis] && *h < above && (n[axis] > 0.0 || q[axis] == res - 1))
            {
              cell = 1;
            }
            // Step from the previous voxel, this one as the upper end.
            if (*h >= below && *h < center[axis] && (n[axis] < 0.0 || q[axis] == 0))
            {
              cell = 1;
            }
          }
        }
      }
    }
  });
}

/// Every undirected edge shared by exactly two faces.
inline bool is_watertight(const TriMesh& mesh)
{
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const Face& f : mesh.faces())
  {
    for (int e = 0; e < 3; ++e)
    {
      const auto a = f[e];
      const auto b = f[(e + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  return std::all_of(edges.begin(), edges.end(), [](const auto& kv) { return kv.second == 2; });
}

/// Empty voxels 6-connected to the grid boundary.
inline std::vector<std::uint8_t> exterior(const VoxelGrid& grid)
{
  const int res = grid.res;
  std::vector<std::uint8_t> out(grid.cells.size(), 0);
  std::vector<std::size_t> stack;
  auto push = [&](int i, int j, int k) {
    const std::size_t idx = grid.index(i, j, k);
    if (!grid.cells[idx] && !out[idx])
    {
      out[idx] = 1;
      stack.push_back(idx);
    }
  };
  for (int k = 0; k < res; ++k)
  {
    for (int j = 0; j < res; ++j)
    {
      for (int i = 0; i < res; ++i)
      {
        if (i == 0 || j == 0 || k == 0 || i == res - 1 || j == res - 1 || k == res - 1)
        {
          push(i, j, k);
        }
      }
    }
  }
  static constexpr int kNeighbors[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!stack.empty())
  {
    const auto [i, j, k] = grid.coords(stack.back());
    stack.pop_back();
    for (const auto& d : kNeighbors)
    {
      if (grid.in_bounds(i + d[0], j + d[1], k + d[2]))
      {
        push(i + d[0], j + d[1], k + d[2]);
      }
    }
  }
  return out;
}

struct SolidVoxelization
{
  VoxelGrid grid;
  bool watertight = true;  // false: the fill is still produced but may be wrong
};

/// Surface rasterization, then everything not reachable from the boundary
/// through empty voxels is filled.
inline SolidVoxelization voxelize_solid(const TriMesh& mesh, VoxelGrid grid, unsigned threads = 1)
{
  std::fill(grid.cells.begin(), grid.cells.end(), std::uint8_t{0});
  rasterize_surface(mesh, grid, threads);
  const auto outside = exterior(grid);
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
  {
    grid.cells[i] = outside[i] ? 0 : 1;
  }
  return {std::move(grid), is_watertight(mesh)};
}

inline SolidVoxelization voxelize_solid(const TriMesh& mesh, int res = 64, unsigned threads = 1)
{
  return voxelize_solid(mesh, VoxelGrid::unit_cube(res), threads);
}

/// Occupied voxels with an empty or out-of-grid 6-neighbor.
inline VoxelGrid surface_voxels(const VoxelGrid& grid)
{
  VoxelGrid mask = grid;
  std::fill(mask.cells.begin(), mask.cells.end(), std::uint8_t{0});
  static constexpr int kNeighbors[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int k = 0; k < grid.res; ++k)
  {
    for (int j = 0; j < grid.res; ++j)
    {
      for (int i = 0; i < grid.res; ++i)
      {
        if (!grid.at(i, j, k))
        {
          continue;
        }
        for (const auto& d : kNeighbors)
        {
          const int a = i + d[0];
          const int b = j + d[1];
          const int c = k + d[2];
          if (!grid.in_bounds(a, b, c) || !grid.at(a, b, c))
          {
            mask.cells[mask.index(i, j, k)] = 1;
            break;
          }
        }
      }
    }
  }
  return mask;
}
}  // namespace contactscan::repr
