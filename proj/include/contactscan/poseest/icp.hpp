#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/util/kdtree.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::poseest
{
struct IcpParams
{
  int max_iterations = 60;
  double correspondence_max_dist = 0.01;  // m
  double convergence_eps = 1e-7;          // m
  double fitness_threshold = 0.7;
  std::size_t max_working_points = 3000;

  void validate() const
  {
    if (max_iterations <= 0 || max_working_points < 3 || !(correspondence_max_dist > 0.0) || !(convergence_eps > 0.0) ||
        !(fitness_threshold > 0.0 && fitness_threshold <= 1.0))
    {
      throw std::invalid_argument("ICP parameters must be positive, fitness in (0, 1]");
    }
  }
};

enum class PoseSource
{
  icp,
  interpolated,
};

inline const char* source_name(PoseSource s) { return s == PoseSource::icp ? "icp" : "interpolated"; }

struct PoseEstimate
{
  RigidPose pose;  // object frame -> camera frame
  double fitness = 0.0;
  PoseSource source = PoseSource::icp;
};

struct IcpResult
{
  PoseEstimate estimate;
  std::vector<double> objective;  // per iteration, non-increasing
  int iterations = 0;
  bool converged = false;
};

/// Point samples of a mesh surface: all vertices plus, per face, a seeded
/// random count of uniform samples averaging one per spacing^2 of area.
/// Random rather than lattice placement keeps revolved meshes from
/// producing periodic point sets.
inline PointList surface_samples(const TriMesh& mesh, double spacing, std::uint64_t seed = 0)
{
  if (!(spacing > 0.0))
  {
    throw std::invalid_argument("sample spacing must be positive");
  }
  util::Rng rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  PointList out(mesh.vertices().begin(), mesh.vertices().end());
  for (std::size_t f = 0; f < mesh.faces().size(); ++f)
  {
    const Face& face = mesh.faces()[f];
    const Vec3& a = mesh.vertices()[face[0]];
    const Vec3& b = mesh.vertices()[face[1]];
    const Vec3& c = mesh.vertices()[face[2]];
    const double expected = mesh.face_area(f) / (spacing * spacing);
    const auto n = static_cast<std::size_t>(std::floor(expected + unit()));
    for (std::size_t k = 0; k < n; ++k)
    {
      double u = unit();
      double v = unit();
      if (u + v > 1.0)
      {
        u = 1.0 - u;
        v = 1.0 - v;
      }
      out.push_back((1.0 - u - v) * a + u * b + v * c);
    }
  }
  return out;
}

/// Registration target: model points in the object frame.
class IcpModel
{
public:
  explicit IcpModel(PointList points) : points_(std::move(points)), tree_(points_)
  {
    if (points_.empty())
    {
      throw std::invalid_argument("empty ICP model");
    }
    const AlignedBox box = bounding_box(points_);
    radius_ = 0.5 * box.extent().norm();
  }

  const PointList& points() const { return points_; }
  const util::KdTree& tree() const { return tree_; }
  double radius() const { return radius_; }

private:
  PointList points_;
  util::KdTree tree_;
  double radius_ = 0.0;
};

/// Rigid transform minimizing sum |R a_i + t - b_i|^2.
inline RigidPose kabsch(std::span<const Vec3> a, std::span<const Vec3> b)
{
  const Vec3 ca = centroid(a);
  const Vec3 cb = centroid(b);
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    h += (a[i] - ca) * (b[i] - cb).transpose();
  }
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return RigidPose::orthonormalized(r, cb - r * ca);
}

namespace icp_detail
{
struct Evaluation
{
  double objective = 0.0;  // mean of min(d^2, tau^2)
  std::size_t inliers = 0;
  PointList source;  // inlier observed points in object frame
  PointList target;  // matching model points
};

inline Evaluation evaluate(const IcpModel& model, std::span<const Vec3> observed,
                           const RigidPose& object_from_camera, double tau, bool keep_pairs)
{
  Evaluation e;
  const double tau2 = tau * tau;
  double sum = 0.0;
  for (const Vec3& q : observed)
  {
    const Vec3 a = object_from_camera.apply(q);
    const auto hit = model.tree().nearest_within(a, tau2);
    if (hit.squared_distance < tau2)
    {
      sum += hit.squared_distance;
      ++e.inliers;
      if (keep_pairs)
      {
        e.source.push_back(a);
        e.target.push_back(model.points()[hit.index]);
      }
    }
    else
    {
      sum += tau2;
    }
  }
  e.objective = sum / static_cast<double>(observed.size());
  return e;
}
}  // namespace icp_detail

/// Point-to-point ICP with a hard correspondence cutoff. `init` and the
/// result map the object frame into the frame of `observed`. The objective
/// is the truncated mean squared distance, which cannot increase between
/// iterations; a step that would increase it (rounding) ends the loop.
inline IcpResult icp_register(const IcpModel& model, std::span<const Vec3> observed,
                              const RigidPose& init, const IcpParams& params)
{
  params.validate();
  if (observed.empty())
  {
    throw std::invalid_argument("empty observed cloud");
  }
  const double tau = params.correspondence_max_dist;
  IcpResult result;
  RigidPose inv = init.inverse();
  // Iterate on an evenly strided subset; fitness uses every point.
  PointList subset;
  std::span<const Vec3> working = observed;
  if (observed.size() > params.max_working_points)
  {
    subset.reserve(params.max_working_points);
    for (std::size_t k = 0; k < params.max_working_points; ++k)
    {
      subset.push_back(observed[k * observed.size() / params.max_working_points]);
    }
    working = subset;
  }
  auto eval = icp_detail::evaluate(model, working, inv, tau, true);
  result.objective.push_back(eval.objective);
  if (eval.inliers == 0)
  {
    result.estimate = {init, 0.0, PoseSource::icp};
    return result;
  }
  for (int it = 0; it < params.max_iterations; ++it)
  {
    if (eval.inliers < 3)
    {
      break;
    }
    const RigidPose step = kabsch(eval.source, eval.target);
    RigidPose best_inv = step * inv;
    auto best = icp_detail::evaluate(model, working, best_inv, tau, true);
    if (best.objective > eval.objective)
    {
      break;
    }
    // Point-to-point steps shrink along sliding directions; try longer steps
    // along the same screw and keep the lowest objective.
    const Eigen::AngleAxisd aa(step.rotation());
    for (const double scale : {2.0, 4.0})
    {
      const RigidPose longer(Eigen::AngleAxisd(scale * aa.angle(), aa.axis()).toRotationMatrix(),
                             scale * step.translation());
      const RigidPose cand_inv = longer * inv;
      auto cand = icp_detail::evaluate(model, working, cand_inv, tau, true);
      if (cand.objective >= best.objective)
      {
        break;
      }
      best_inv = cand_inv;
      best = std::move(cand);
    }
    const double moved = step.translation().norm() +
                         step.rotation_angle_to(RigidPose::identity()) * model.radius();
    inv = best_inv;
    eval = std::move(best);
    result.objective.push_back(eval.objective);
    result.iterations = it + 1;
    if (moved < params.convergence_eps)
    {
      result.converged = true;
      break;
    }
  }
  result.estimate.pose = inv.inverse();
  const auto full = working.size() == observed.size()
                        ? std::move(eval)
                        : icp_detail::evaluate(model, observed, inv, tau, false);
  result.estimate.fitness = static_cast<double>(full.inliers) / static_cast<double>(observed.size());
  result.estimate.source = PoseSource::icp;
  return result;
}

inline PoseEstimate icp_register(std::span<const Vec3> model_points,
                                 std::span<const Vec3> observed, const RigidPose& init,
                                 const IcpParams& params)
{
  const IcpModel model(PointList(model_points.begin(), model_points.end()));
  return icp_register(model, observed, init, params).estimate;
}
}  // namespace contactscan::poseest
