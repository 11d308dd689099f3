#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "contactscan/core/types.hpp"
#include "contactscan/util/image.hpp"

namespace contactscan::fuse
{
struct Projection
{
  Vec2 pixel = Vec2::Zero();
  double depth = 0.0;  // camera-frame z
  bool valid = false;  // false for points at or behind the camera
};

/// Pinhole projection u = fx x / z + cx, v = fy y / z + cy of a point in the
/// object frame.
inline Projection project_vertex(const Vec3& v, const RigidPose& pose, const CameraIntrinsics& cam)
{
  const Vec3 p = pose.apply(v);
  Projection out;
  out.depth = p.z();
  if (!(p.z() > 0.0))
  {
    return out;
  }
  out.pixel = Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
  out.valid = true;
  return out;
}

/// Viewing weight max(0, -n . view_dir) of an object-frame point and normal.
inline double view_weight(const Vec3& v, const Vec3& normal, const RigidPose& pose)
{
  const Vec3 p = pose.apply(v);
  const double len = p.norm();
  if (!(len > 0.0))
  {
    return 0.0;
  }
  return std::max(0.0, -pose.rotate(normal).dot(p) / len);
}

inline bool depth_consistent(const FloatImage& depth, int x, int y, double z, double eps)
{
  if (!depth.in_bounds(x, y))
  {
    return false;
  }
  const double d = depth(x, y);
  return d > 0.0 && std::abs(d - z) <= eps;
}

/// A vertex is visible when its nearest pixel is in bounds, the observed depth
/// there agrees within depth_eps and its outward normal faces the camera.
inline std::vector<bool> vertex_visibility(const TriMesh& mesh, const RigidPose& pose,
                                           const CameraIntrinsics& cam, const FloatImage& depth,
                                           double depth_eps)
{
  std::vector<bool> out(mesh.num_vertices(), false);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
  {
    const Projection pr = project_vertex(mesh.vertices()[i], pose, cam);
    if (!pr.valid)
    {
      continue;
    }
    const int x = static_cast<int>(std::lround(pr.pixel.x()));
    const int y = static_cast<int>(std::lround(pr.pixel.y()));
    out[i] = depth_consistent(depth, x, y, pr.depth, depth_eps) &&
             view_weight(mesh.vertices()[i], mesh.vertex_normals()[i], pose) > 0.0;
  }
  return out;
}

/// Bilinear sample of `image` at a sub-pixel location using only the corner
/// pixels whose depth agrees with z; weights are renormalized over them.
inline std::optional<double> sample_consistent(const FloatImage& image, const FloatImage& depth,
                                               const Vec2& pixel, double z, double eps)
{
  const double fx = std::floor(pixel.x());
  const double fy = std::floor(pixel.y());
  const double ax = pixel.x() - fx;
  const double ay = pixel.y() - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  double sum = 0.0;
  double wsum = 0.0;
  for (int dy = 0; dy < 2; ++dy)
  {
    for (int dx = 0; dx < 2; ++dx)
    {
      const double w = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
      if (w > 0.0 && depth_consistent(depth, x0 + dx, y0 + dy, z, eps))
      {
        sum += w * image(x0 + dx, y0 + dy);
        wsum += w;
      }
    }
  }
  if (!(wsum > 0.0))
  {
    return std::nullopt;
  }
  return sum / wsum;
}

struct VertexObservation
{
  int view_index = 0;
  double intensity = 0.0;
  double weight = 0.0;  // viewing cosine; 0 when invalid
  bool valid = false;
};

/// Observation of every vertex in one view.
inline std::vector<VertexObservation> observe_view(const TriMesh& mesh, const RigidPose& pose,
                                                   const CameraIntrinsics& cam,
                                                   const FloatImage& depth,
                                                   const FloatImage& thermal, double depth_eps,
                                                   int view_index)
{
  std::vector<VertexObservation> out(mesh.num_vertices());
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
  {
    VertexObservation& o = out[i];
    o.view_index = view_index;
    const Vec3& v = mesh.vertices()[i];
    const Projection pr = project_vertex(v, pose, cam);
    if (!pr.valid)
    {
      continue;
    }
    const int x = static_cast<int>(std::lround(pr.pixel.x()));
    const int y = static_cast<int>(std::lround(pr.pixel.y()));
    if (!depth_consistent(depth, x, y, pr.depth, depth_eps))
    {
      continue;
    }
    const double w = view_weight(v, mesh.vertex_normals()[i], pose);
    if (!(w > 0.0))
    {
      continue;
    }
    const auto s = sample_consistent(thermal, depth, pr.pixel, pr.depth, depth_eps);
    if (!s)
    {
      continue;
    }
    o.intensity = *s;
    o.weight = w;
    o.valid = true;
  }
  return out;
}
}  // namespace contactscan::fuse
