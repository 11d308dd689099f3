#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/fuse/fusion.hpp"
#include "contactscan/fuse/project.hpp"
#include "contactscan/synth/scan.hpp"
#include "contactscan/util/parallel.hpp"

namespace contactscan::fuse
{
struct RefineParams
{
  bool enabled = true;
  int max_outer_iters = 3;
  double rotation_step = 0.25 * std::numbers::pi / 180.0;  // rad
  double translation_step = 0.0005;                         // m
  double min_rotation_step = 0.01 * std::numbers::pi / 180.0;
  double min_translation_step = 0.00002;
  int max_evaluations = 200;  // per view and outer iteration
  double residual_tol = 1e-9;

  void validate() const
  {
    if (max_outer_iters <= 0 || max_evaluations <= 0 || !(rotation_step > 0.0) ||
        !(translation_step > 0.0) || !(min_rotation_step > 0.0) ||
        !(min_translation_step > 0.0) || !(residual_tol > 0.0))
    {
      throw std::invalid_argument("refinement iteration counts and steps must be positive");
    }
  }
};

struct RefineResult
{
  std::vector<RigidPose> poses;
  FusionResult fusion;
  std::vector<double> residual;  // total photometric residual per accepted outer iteration
};

/// Weighted mean squared difference between the intensities a view samples at
/// the visible vertices and the intensities predicted by `map`. Infinite when
/// no vertex is visible.
inline double view_residual(const TriMesh& mesh, const synth::View& view,
                            const CameraIntrinsics& cam, const RigidPose& pose,
                            const ContactMap& map, const FusionParams& params)
{
  const auto obs = observe_view(mesh, pose, cam, view.depth, view.thermal, params.depth_eps, 0);
  double sum = 0.0;
  double wsum = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k)
  {
    if (!obs[k].valid)
    {
      continue;
    }
    const double predicted = params.ambient_level + (1.0 - params.ambient_level) * map[k];
    const double r = obs[k].intensity - predicted;
    sum += obs[k].weight * r * r;
    wsum += obs[k].weight;
  }
  return wsum > 0.0 ? sum / wsum : std::numeric_limits<double>::infinity();
}

inline double total_residual(const TriMesh& mesh, const synth::ScanSequence& scan,
                             std::span<const RigidPose> poses, const ContactMap& map,
                             const FusionParams& params)
{
  std::vector<double> r(scan.views.size());
  util::parallel_for(0, r.size(), params.threads, [&](std::size_t i) {
    r[i] = view_residual(mesh, scan.views[i], scan.rig.camera, poses[i], map, params);
  });
  double total = 0.0;
  for (const std::size_t i : fusion_order(scan))
  {
    total += r[i];
  }
  return total;
}

/// Compass search over 6-DoF pose increments (rotations about the object
/// centroid, translations along the camera axes) for one view.
inline RigidPose refine_view(const TriMesh& mesh, const synth::View& view,
                             const CameraIntrinsics& cam, const RigidPose& start,
                             const ContactMap& map, const FusionParams& fparams,
                             const RefineParams& params)
{
  const Vec3 center = centroid(mesh.vertices());
  auto move = [&](const RigidPose& p, int dir, double sr, double st) {
    const int axis = dir / 2 % 3;
    const double sign = dir % 2 == 0 ? 1.0 : -1.0;
    if (dir < 6)
    {
      const Vec3 c = p.apply(center);
      const RigidPose r = RigidPose::from_translation(c) *
                          RigidPose::from_axis_angle(Vec3::Unit(axis), sign * sr) *
                          RigidPose::from_translation(-c);
      return r * p;
    }
    return RigidPose::from_translation(sign * st * Vec3::Unit(axis)) * p;
  };
  RigidPose best = start;
  double best_r = view_residual(mesh, view, cam, best, map, fparams);
  double sr = params.rotation_step;
  double st = params.translation_step;
  int evals = 1;
  while (evals < params.max_evaluations &&
         (sr >= params.min_rotation_step || st >= params.min_translation_step))
  {
    int best_dir = -1;
    RigidPose cand_best = best;
    double cand_r = best_r;
    for (int dir = 0; dir < 12 && evals < params.max_evaluations; ++dir)
    {
      const RigidPose cand = move(best, dir, sr, st);
      const double r = view_residual(mesh, view, cam, cand, map, fparams);
      ++evals;
      if (r < cand_r)
      {
        cand_r = r;
        cand_best = cand;
        best_dir = dir;
      }
    }
    if (best_dir < 0)
    {
      sr *= 0.5;
      st *= 0.5;
      continue;
    }
    best = cand_best;
    best_r = cand_r;
    // Keep going in the successful direction while it helps.
    while (evals < params.max_evaluations)
    {
      const RigidPose cand = move(best, best_dir, sr, st);
      const double r = view_residual(mesh, view, cam, cand, map, fparams);
      ++evals;
      if (!(r < best_r))
      {
        break;
      }
      best = cand;
      best_r = r;
    }
  }
  return best;
}

/// Alternates per-view pose search against the current fused map with
/// re-fusion. An outer iteration that would increase the total residual is
/// rejected, so the residual history is non-increasing.
inline RefineResult refine_poses(const TriMesh& mesh, const synth::ScanSequence& scan,
                                 std::span<const RigidPose> poses, const FusionResult& current,
                                 const RefineParams& params, const FusionParams& fparams = {})
{
  RefineResult out;
  out.poses.assign(poses.begin(), poses.end());
  out.fusion = current;
  if (!params.enabled)
  {
    return out;
  }
  params.validate();
  fparams.validate();
  double total = total_residual(mesh, scan, out.poses, out.fusion.map, fparams);
  out.residual.push_back(total);
  for (int it = 0; it < params.max_outer_iters; ++it)
  {
    std::vector<RigidPose> next(out.poses);
    util::parallel_for(0, next.size(), fparams.threads, [&](std::size_t i) {
      next[i] = refine_view(mesh, scan.views[i], scan.rig.camera, out.poses[i], out.fusion.map,
                            fparams, params);
    });
    FusionResult fused = fuse_views(mesh, scan, next, fparams);
    const double next_total = total_residual(mesh, scan, next, fused.map, fparams);
    if (!(next_total <= total))
    {
      break;
    }
    const double gain = total - next_total;
    out.poses = std::move(next);
    out.fusion = std::move(fused);
    total = next_total;
    out.residual.push_back(total);
    if (gain < params.residual_tol)
    {
      break;
    }
  }
  return out;
}
}  // namespace contactscan::fuse
