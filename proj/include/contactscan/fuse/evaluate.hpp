#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/poseest/icp.hpp"
#include "contactscan/util/kdtree.hpp"

namespace contactscan::fuse
{
/// Piecewise-linear evaluation of a vertex map at arbitrary points: closest
/// point among the faces around the nearest vertex, barycentric blend.
class MapSampler
{
public:
  MapSampler(const TriMesh& mesh, const ContactMap& map)
      : mesh_(mesh), map_(map), tree_(mesh.vertices()), faces_(vertex_faces(mesh))
  {
    map.require_mesh(mesh);
  }

  double operator()(const Vec3& p) const
  {
    const auto hit = tree_.nearest(p);
    double best_d = std::numeric_limits<double>::infinity();
    double value = map_[hit.index];
    for (const auto f : faces_[hit.index])
    {
      const Face& t = mesh_.faces()[f];
      Vec3 bary;
      const Vec3 q = closest_point_on_triangle(p, mesh_.vertices()[t[0]], mesh_.vertices()[t[1]],
                                               mesh_.vertices()[t[2]], &bary);
      const double d = util::squared_distance(p, q);
      if (d < best_d)
      {
        best_d = d;
        value = bary[0] * map_[t[0]] + bary[1] * map_[t[1]] + bary[2] * map_[t[2]];
      }
    }
    return std::clamp(value, 0.0, 1.0);
  }

private:
  const TriMesh& mesh_;
  const ContactMap& map_;
  util::KdTree tree_;
  std::vector<std::vector<std::uint32_t>> faces_;
};

/// Map whose value at vertex v is `map` evaluated at s(v). With
/// s = gt_pose^-1 * estimated_pose this expresses a ground-truth map in the
/// frame of a reconstruction that is only defined up to object symmetry.
inline ContactMap transfer_map(const TriMesh& mesh, const ContactMap& map, const RigidPose& s)
{
  const MapSampler sample(mesh, map);
  std::vector<double> values;
  values.reserve(mesh.num_vertices());
  for (const Vec3& v : mesh.vertices())
  {
    values.push_back(sample(s.apply(v)));
  }
  return ContactMap(mesh, std::move(values));
}

/// Nearest rigid motion to `s` that maps the mesh onto itself (ICP of the
/// mesh against its own surface). Removes pose error from a symmetry estimate.
inline RigidPose snap_to_symmetry(const TriMesh& mesh, const RigidPose& s)
{
  const poseest::IcpModel model(poseest::surface_samples(mesh, 0.001));
  poseest::IcpParams params;
  params.max_iterations = 100;
  params.correspondence_max_dist = 0.005;
  params.convergence_eps = 1e-9;
  params.max_working_points = 5000;
  const auto r = poseest::icp_register(model, mesh.vertices(), s.inverse(), params);
  return r.estimate.pose.inverse();
}

/// |A and B| / |A or B| over vertices with value > threshold; 1 when both
/// sets are empty.
inline double contact_iou(const ContactMap& a, const ContactMap& b, double threshold = 0.4)
{
  if (a.values().size() != b.values().size())
  {
    throw std::invalid_argument("maps differ in size");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
  {
    const bool x = a[i] > threshold;
    const bool y = b[i] > threshold;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Root mean squared difference over vertices with coverage > 0.
inline double covered_rmse(const ContactMap& a, const ContactMap& b,
                           std::span<const std::uint32_t> coverage)
{
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < coverage.size(); ++i)
  {
    if (coverage[i] > 0)
    {
      const double d = a[i] - b[i];
      sum += d * d;
      ++n;
    }
  }
  if (n == 0)
  {
    throw std::invalid_argument("no covered vertices");
  }
  return std::sqrt(sum / static_cast<double>(n));
}

/// Area- and value-weighted centroid of the vertices whose value exceeds
/// `threshold`.
inline Vec3 contact_centroid(const TriMesh& mesh, const ContactMap& map, double threshold = 0.0)
{
  map.require_mesh(mesh);
  const auto area = vertex_areas(mesh);
  Vec3 sum = Vec3::Zero();
  double w = 0.0;
  for (std::size_t i = 0; i < area.size(); ++i)
  {
    if (!(map[i] > threshold))
    {
      continue;
    }
    sum += area[i] * map[i] * mesh.vertices()[i];
    w += area[i] * map[i];
  }
  if (!(w > 0.0))
  {
    throw std::invalid_argument("no contact above threshold");
  }
  return sum / w;
}

struct ReconstructionMetrics
{
  double iou = 0.0;
  double rmse = 0.0;
  double centroid_error = 0.0;  // m
  std::size_t covered = 0;
  std::size_t vertices = 0;
  RigidPose symmetry;  // applied to the ground truth before comparison
};

/// Compares a reconstruction against ground truth. The ground truth is first
/// moved through the object symmetry implied by the estimated and true poses
/// of one view.
inline ReconstructionMetrics evaluate_reconstruction(const TriMesh& mesh, const ContactMap& estimate,
                                                     std::span<const std::uint32_t> coverage,
                                                     const ContactMap& ground_truth,
                                                     const RigidPose& estimated_pose,
                                                     const RigidPose& true_pose,
                                                     double threshold = 0.4)
{
  ReconstructionMetrics m;
  m.symmetry = snap_to_symmetry(mesh, true_pose.inverse() * estimated_pose);
  const ContactMap gt = transfer_map(mesh, ground_truth, m.symmetry);
  m.iou = contact_iou(estimate, gt, threshold);
  m.rmse = covered_rmse(estimate, gt, coverage);
  m.vertices = mesh.num_vertices();
  for (const auto c : coverage)
  {
    m.covered += c > 0;
  }
  m.centroid_error = (contact_centroid(mesh, estimate, threshold) - contact_centroid(mesh, gt, threshold)).norm();
  return m;
}
}  // namespace contactscan::fuse
