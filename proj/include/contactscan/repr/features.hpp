#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "contactscan/analysis/config.hpp"
#include "contactscan/analysis/normalize.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/repr/normalize.hpp"
#include "contactscan/repr/sample.hpp"
#include "contactscan/repr/voxel.hpp"
#include "contactscan/util/kdtree.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::repr
{
using Labels = std::vector<std::uint8_t>;

/// Per-vertex binary contact: sigmoid-normalize, then value > threshold.
/// Constant maps cannot be normalized and are thresholded as they are.
inline Labels contact_labels(const TriMesh& mesh, const ContactMap& map,
                             const analysis::AnalysisConfig& cfg = {})
{
  map.require_mesh(mesh);
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  const ContactMap normalized = *hi > *lo ? analysis::normalize_sigmoid(mesh, map, cfg) : map;
  Labels out(mesh.num_vertices());
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] = normalized[i] > cfg.contact_threshold ? 1 : 0;
  }
  return out;
}

struct AugmentSpec
{
  double yaw = 0.0;  // radians about +z
  int axis = 0;      // axis scaled for point samples
  double factor = 1.0;

  void validate() const
  {
    if (axis < 0 || axis > 2)
    {
      throw std::invalid_argument("augment axis must be 0, 1 or 2");
    }
    if (!(factor >= 0.6 && factor <= 1.4))
    {
      throw std::invalid_argument("augment scale factor must lie in [0.6, 1.4]");
    }
  }

  static AugmentSpec random(std::uint64_t seed)
  {
    util::Rng rng(seed);
    AugmentSpec s;
    s.yaw = 2.0 * std::numbers::pi * unit_uniform(rng);
    s.axis = static_cast<int>(rng() % 3);
    s.factor = 0.6 + 0.8 * unit_uniform(rng);
    return s;
  }
};

/// Rotation about +z; entries within 1e-15 of 0 or 1 are snapped so quarter
/// turns are exact permutations.
inline Mat3 yaw_matrix(double angle)
{
  auto snap = [](double v) {
    if (std::abs(v) < 1e-15)
    {
      return 0.0;
    }
    if (std::abs(std::abs(v) - 1.0) < 1e-15)
    {
      return std::copysign(1.0, v);
    }
    return v;
  };
  const double c = snap(std::cos(angle));
  const double s = snap(std::sin(angle));
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

struct PointSample
{
  PointList points;  // unit-cube coordinates
  double scale = 1.0;
  Labels labels;

  /// N x 4 row-major: x, y, z, scale.
  std::vector<float> features() const
  {
    std::vector<float> f;
    f.reserve(points.size() * 4);
    for (const Vec3& p : points)
    {
      f.push_back(static_cast<float>(p.x()));
      f.push_back(static_cast<float>(p.y()));
      f.push_back(static_cast<float>(p.z()));
      f.push_back(static_cast<float>(scale));
    }
    return f;
  }
};

/// Label of the nearest mesh vertex for every point.
inline Labels label_points(const PointList& points, const TriMesh& mesh, const Labels& vertex_labels)
{
  if (vertex_labels.size() != mesh.num_vertices())
  {
    throw std::invalid_argument("vertex labels do not match the mesh");
  }
  const util::KdTree tree(mesh.vertices());
  Labels out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    out[i] = vertex_labels[tree.nearest(points[i]).index];
  }
  return out;
}

/// Yaw, then scaling of one axis, then unit-cube renormalization. The scale
/// is updated so that points * scale stays in meters.
inline PointSample augment(const PointSample& sample, const AugmentSpec& spec)
{
  spec.validate();
  const Mat3 r = yaw_matrix(spec.yaw);
  PointList moved;
  moved.reserve(sample.points.size());
  for (const Vec3& p : sample.points)
  {
    Vec3 q = r * (sample.scale * p);
    q[spec.axis] *= spec.factor;
    moved.push_back(q);
  }
  const NormalizedPoints n = normalize_unit_cube(moved);
  return {n.points, n.scale, sample.labels};
}

inline PointSample make_point_sample(const TriMesh& mesh, const Labels& vertex_labels, std::size_t n,
                                     std::uint64_t seed)
{
  const SurfaceSamples s = sample_surface(mesh, n, seed);
  const Labels labels = label_points(s.points, mesh, vertex_labels);
  const NormalizedPoints np = normalize_unit_cube(s.points);
  return {np.points, np.scale, labels};
}

struct VoxelSample
{
  VoxelGrid grid;     // solid occupancy
  VoxelGrid surface;  // surface mask, subset of grid
  double scale = 1.0;
  std::vector<std::uint32_t> surface_indices;  // ascending cell indices
  Labels labels;                               // one per surface voxel
  bool watertight = true;

  /// res^3 x 5 row-major: occupancy, x, y, z (normalized voxel center), scale.
  std::vector<float> features() const
  {
    std::vector<float> f;
    f.reserve(grid.cells.size() * 5);
    for (std::size_t idx = 0; idx < grid.cells.size(); ++idx)
    {
      const auto [i, j, k] = grid.coords(idx);
      const Vec3 c = grid.center(i, j, k);
      f.push_back(static_cast<float>(grid.cells[idx]));
      f.push_back(static_cast<float>(c.x()));
      f.push_back(static_cast<float>(c.y()));
      f.push_back(static_cast<float>(c.z()));
      f.push_back(static_cast<float>(scale));
    }
    return f;
  }
};

/// Surface voxel label: 1 iff a contacted vertex lies in the cell; cells
/// without any vertex take the label of the vertex nearest their center.
inline Labels label_voxels(const VoxelGrid& surface, const std::vector<std::uint32_t>& surface_indices,
                           const TriMesh& mesh, const Labels& vertex_labels)
{
  if (vertex_labels.size() != mesh.num_vertices())
  {
    throw std::invalid_argument("vertex labels do not match the mesh");
  }
  std::vector<std::uint8_t> has_vertex(surface.cells.size(), 0);
  std::vector<std::uint8_t> hot(surface.cells.size(), 0);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
  {
    const auto [i, j, k] = surface.locate(mesh.vertices()[v]);
    const std::size_t idx = surface.index(i, j, k);
    has_vertex[idx] = 1;
    hot[idx] |= vertex_labels[v];
  }
  const util::KdTree tree(mesh.vertices());
  Labels out(surface_indices.size());
  for (std::size_t s = 0; s < surface_indices.size(); ++s)
  {
    const std::size_t idx = surface_indices[s];
    if (has_vertex[idx])
    {
      out[s] = hot[idx];
    }
    else
    {
      const auto [i, j, k] = surface.coords(idx);
      out[s] = vertex_labels[tree.nearest(surface.center(i, j, k)).index];
    }
  }
  return out;
}

/// Yaw-rotates the mesh, fits it into the unit cube and voxelizes it.
inline VoxelSample make_voxel_sample(const TriMesh& mesh, const Labels& vertex_labels, int res = 64,
                                     double yaw = 0.0, unsigned threads = 1)
{
  const TriMesh rotated(transform_points(mesh.vertices(), RigidPose(yaw_matrix(yaw), Vec3::Zero())),
                        mesh.faces());
  UnitCubeFrame frame;
  const TriMesh unit = normalize_mesh(rotated, &frame);
  VoxelSample out;
  SolidVoxelization solid = voxelize_solid(unit, res, threads);
  out.grid = std::move(solid.grid);
  out.watertight = solid.watertight;
  out.surface = surface_voxels(out.grid);
  out.scale = frame.scale;
  for (std::size_t idx = 0; idx < out.surface.cells.size(); ++idx)
  {
    if (out.surface.cells[idx])
    {
      out.surface_indices.push_back(static_cast<std::uint32_t>(idx));
    }
  }
  out.labels = label_voxels(out.surface, out.surface_indices, unit, vertex_labels);
  return out;
}
}  // namespace contactscan::repr
