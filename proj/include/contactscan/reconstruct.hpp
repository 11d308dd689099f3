#pragma once

#include <vector>

#include "contactscan/fuse/evaluate.hpp"
#include "contactscan/fuse/fusion.hpp"
#include "contactscan/fuse/refine.hpp"
#include "contactscan/poseest/pipeline.hpp"
#include "contactscan/synth/scan.hpp"

namespace contactscan
{
struct ReconstructOptions
{
  poseest::IcpParams icp;
  poseest::PoseEstimationOptions pose;
  fuse::FusionParams fusion;
  fuse::RefineParams refine;
  SymmetrySpec symmetry;
  bool subtract_ambient = true;  // use the scan's recorded ambient level
};

struct ReconstructResult
{
  poseest::PoseEstimationResult estimation;
  std::vector<poseest::PoseEstimate> poses;  // after refinement
  fuse::FusionResult fusion;
  std::vector<double> refine_residual;
};

/// Pose estimation, texture fusion and optional photometric refinement.
inline ReconstructResult reconstruct(const synth::ScanSequence& scan, const TriMesh& mesh,
                                     const ReconstructOptions& options)
{
  ReconstructResult out;
  fuse::FusionParams fparams = options.fusion;
  if (options.subtract_ambient)
  {
    fparams.ambient_level = scan.noise.ambient_level;
  }
  out.estimation =
      poseest::estimate_scan_poses(scan, mesh, options.symmetry, options.icp, options.pose);
  std::vector<RigidPose> poses;
  for (const auto& e : out.estimation.poses)
  {
    poses.push_back(e.pose);
  }
  out.fusion = fuse::fuse_views(mesh, scan, poses, fparams);
  out.poses = out.estimation.poses;
  if (options.refine.enabled)
  {
    auto refined = fuse::refine_poses(mesh, scan, poses, out.fusion, options.refine, fparams);
    out.fusion = std::move(refined.fusion);
    out.refine_residual = std::move(refined.residual);
    for (std::size_t i = 0; i < poses.size(); ++i)
    {
      out.poses[i].pose = refined.poses[i];
    }
  }
  return out;
}
}  // namespace contactscan
