#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "contactscan/core/error.hpp"
#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/poseest/circle.hpp"
#include "contactscan/poseest/icp.hpp"
#include "contactscan/poseest/plane.hpp"
#include "contactscan/synth/scan.hpp"
#include "contactscan/util/format.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::poseest
{
struct PoseEstimationOptions
{
  double height_eps = 0.002;         // m above the fitted turntable plane
  double plane_inlier_dist = 0.005;  // m, RANSAC inlier band
  int ransac_iterations = 200;
  double model_spacing = 0.0015;  // m, ICP model lattice spacing
  int init_random_hypotheses = 48;
  std::size_t min_object_points = 50;
  std::uint64_t seed = 0;
};

struct ViewReport
{
  std::size_t object_points = 0;
  bool segmented = false;
  double fitness = 0.0;  // ICP fitness, 0 when segmentation failed
  bool demoted = false;  // rejected by the circle consistency check
};

struct PoseEstimationResult
{
  std::vector<PoseEstimate> poses;
  std::vector<ViewReport> views;
  Circle3D circle;
  bool circle_degenerate = false;  // origins coincide; circle collapsed to a point
  double circle_rms = 0.0;
  std::size_t reference_view = 0;
};

/// Splits rotation q into swing * twist with the twist about `axis` and
/// returns the swing.
inline Mat3 remove_twist(const Mat3& q, const Vec3& axis)
{
  const Eigen::Quaterniond qq(q);
  const double p = qq.vec().dot(axis);
  Eigen::Quaterniond twist(qq.w(), p * axis.x(), p * axis.y(), p * axis.z());
  if (twist.norm() < 1e-12)
  {
    return q;
  }
  twist.normalize();
  return project_to_rotation((qq * twist.conjugate()).toRotationMatrix());
}

/// The 24 proper rotations that permute and flip coordinate axes.
inline std::vector<Mat3> octahedral_rotations()
{
  std::vector<Mat3> out;
  const std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (const auto& p : perms)
  {
    for (int s = 0; s < 8; ++s)
    {
      Mat3 m = Mat3::Zero();
      for (int r = 0; r < 3; ++r)
      {
        m(r, p[r]) = (s >> r) & 1 ? -1.0 : 1.0;
      }
      if (m.determinant() > 0.0)
      {
        out.push_back(m);
      }
    }
  }
  return out;
}

namespace pipeline_detail
{
inline PointList downsample(const PointList& pts, std::size_t max_points)
{
  if (pts.size() <= max_points)
  {
    return pts;
  }
  PointList out;
  out.reserve(max_points);
  for (std::size_t k = 0; k < max_points; ++k)
  {
    out.push_back(pts[k * pts.size() / max_points]);
  }
  return out;
}

/// First point of every occupied cell of a `cell`-sized grid, in input order.
inline PointList grid_downsample(const PointList& pts, double cell)
{
  std::map<std::array<long long, 3>, bool> seen;
  PointList out;
  for (const Vec3& p : pts)
  {
    const std::array<long long, 3> key{static_cast<long long>(std::floor(p.x() / cell)),
                                       static_cast<long long>(std::floor(p.y() / cell)),
                                       static_cast<long long>(std::floor(p.z() / cell))};
    if (seen.emplace(key, true).second)
    {
      out.push_back(p);
    }
  }
  return out;
}

inline std::pair<Vec3, Mat3> principal_frame(const PointList& pts)
{
  const Vec3 c = centroid(pts);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts)
  {
    cov += (p - c) * (p - c).transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Mat3 e = eig.eigenvectors();
  if (e.determinant() < 0.0)
  {
    e.col(0) = -e.col(0);
  }
  return {c, project_to_rotation(e)};
}

inline Mat3 random_rotation(util::Rng& rng)
{
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return project_to_rotation(q.toRotationMatrix());
}

inline double circular_mean(const std::vector<double>& a)
{
  double s = 0.0;
  double c = 0.0;
  for (const double x : a)
  {
    s += std::sin(x);
    c += std::cos(x);
  }
  return std::atan2(s, c);
}

inline double wrapped(double a)
{
  return std::remainder(a, 2.0 * std::numbers::pi);
}
}  // namespace pipeline_detail

/// Global registration of a (merged) observed cloud against the model:
/// principal-axes and random rotation hypotheses, each refined by a coarse
/// ICP, best few refined with `params`.
inline IcpResult initialize_pose(const IcpModel& model, const PointList& cloud,
                                 const IcpParams& params, int random_hypotheses,
                                 std::uint64_t seed)
{
  using namespace pipeline_detail;
  const PointList coarse_cloud = downsample(cloud, 600);
  const IcpModel coarse_model(grid_downsample(model.points(), 0.08 * model.radius()));
  const PointList fine_cloud = downsample(cloud, 6000);
  const auto [cm, em] = principal_frame(model.points());
  const auto [cc, ec] = principal_frame(cloud);
  std::vector<Mat3> rotations;
  for (const Mat3& g : octahedral_rotations())
  {
    rotations.push_back(project_to_rotation(ec * g * em.transpose()));
  }
  util::Rng rng(seed);
  for (int k = 0; k < random_hypotheses; ++k)
  {
    rotations.push_back(random_rotation(rng));
  }
  IcpParams coarse = params;
  coarse.correspondence_max_dist = std::max(3.0 * params.correspondence_max_dist,
                                            0.5 * model.radius());
  coarse.max_iterations = 30;
  coarse.convergence_eps = 1e-5;
  std::vector<std::pair<double, std::size_t>> scored;
  std::vector<RigidPose> poses;
  for (std::size_t h = 0; h < rotations.size(); ++h)
  {
    const RigidPose start(rotations[h], cc - rotations[h] * cm);
    const IcpResult r = icp_register(coarse_model, coarse_cloud, start, coarse);
    const double score = icp_detail::evaluate(model, coarse_cloud, r.estimate.pose.inverse(),
                                              params.correspondence_max_dist, false)
                             .objective;
    scored.emplace_back(score, h);
    poses.push_back(r.estimate.pose);
  }
  std::sort(scored.begin(), scored.end());
  IcpResult best;
  bool have = false;
  for (std::size_t k = 0; k < std::min<std::size_t>(4, scored.size()); ++k)
  {
    IcpResult r = icp_register(model, fine_cloud, poses[scored[k].second], params);
    if (!have || r.objective.back() < best.objective.back())
    {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

/// Per-view poses of the object for a turntable scan: turntable plane fit and
/// segmentation, ICP seeded through the rig's turntable rotation, circle fit of
/// accepted origins, interpolation of views whose ICP fitness is below the
/// threshold.
inline PoseEstimationResult estimate_scan_poses(const synth::ScanSequence& scan,
                                                const TriMesh& mesh, const SymmetrySpec& sym,
                                                const IcpParams& params,
                                                const PoseEstimationOptions& opts = {})
{
  using namespace pipeline_detail;
  params.validate();
  sym.validate();
  const std::size_t n = scan.views.size();
  if (n < 3)
  {
    throw std::invalid_argument("pose estimation needs at least 3 views");
  }
  const synth::RigConfig& rig = scan.rig;
  PoseEstimationResult result;
  result.views.resize(n);
  std::vector<PointList> clouds(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    try
    {
      const PointCloud all = backproject(scan.views[i].depth, rig.camera);
      if (all.points.size() < 3)
      {
        throw PipelineError(PipelineStage::segmentation, "empty depth image");
      }
      RansacResult fit = fit_plane_ransac(all.points, opts.plane_inlier_dist,
                                          opts.ransac_iterations, util::derive_seed(opts.seed, i));
      if (fit.plane.signed_distance(Vec3::Zero()) < 0.0)
      {
        fit.plane = fit.plane.flipped();
      }
      const double eps = std::max(opts.height_eps, 4.0 * fit.residual_sigma);
      PointCloud object = segment_object(all, fit.plane, eps);
      if (object.points.size() < opts.min_object_points)
      {
        throw PipelineError(PipelineStage::segmentation, "too few object points");
      }
      clouds[i] = std::move(object.points);
      result.views[i].segmented = true;
      result.views[i].object_points = clouds[i].size();
    }
    catch (const PipelineError&)
    {
    }
    catch (const std::invalid_argument&)
    {
    }
  }
  std::size_t ref = n;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (result.views[i].segmented)
    {
      ref = i;
      break;
    }
  }
  if (ref == n)
  {
    throw PipelineError(PipelineStage::segmentation, "no view could be segmented");
  }
  result.reference_view = ref;

  const IcpModel model(surface_samples(mesh, opts.model_spacing));
  const double theta_ref = scan.views[ref].angle;
  PointList merged;
  for (std::size_t i = 0; i < n; ++i)
  {
    const RigidPose to_ref = rig.turntable_motion(theta_ref - scan.views[i].angle);
    for (const Vec3& p : clouds[i])
    {
      merged.push_back(to_ref.apply(p));
    }
  }
  const RigidPose ref_init =
      initialize_pose(model, merged, params, opts.init_random_hypotheses,
                      util::derive_seed(opts.seed, 0x1000))
          .estimate.pose;

  const Vec3 axis_cam = rig.axis_in_camera();
  std::vector<std::optional<RigidPose>> fitted(n);
  std::vector<bool> accepted(n, false);
  auto process = [&](std::size_t i, const RigidPose& seed_pose) {
    if (!result.views[i].segmented)
    {
      return;
    }
    const IcpResult r = icp_register(model, clouds[i], seed_pose, params);
    RigidPose pose = r.estimate.pose;
    if (sym.kind == SymmetryKind::axial && i != ref && fitted[ref])
    {
      const Mat3 pred = axis_angle_rotation(axis_cam, scan.views[i].angle - theta_ref) *
                        fitted[ref]->rotation();
      const Mat3 q = pred.transpose() * pose.rotation();
      pose = RigidPose(project_to_rotation(pred * remove_twist(q, sym.axis)), pose.translation());
    }
    fitted[i] = pose;
    result.views[i].fitness = r.estimate.fitness;
    accepted[i] = r.estimate.fitness >= params.fitness_threshold;
  };
  process(ref, ref_init);
  if (!accepted[ref])
  {
    // Keep the merged-cloud registration as the reference seed.
    fitted[ref] = fitted[ref].value_or(ref_init);
  }
  auto seed_from = [&](std::size_t i, std::size_t k) {
    return rig.turntable_motion(scan.views[i].angle - scan.views[k].angle) * *fitted[k];
  };
  std::size_t last = ref;
  for (std::size_t i = ref + 1; i < n; ++i)
  {
    process(i, seed_from(i, last));
    if (accepted[i])
    {
      last = i;
    }
  }
  last = ref;
  for (std::size_t i = ref; i-- > 0;)
  {
    process(i, seed_from(i, last));
    if (accepted[i])
    {
      last = i;
    }
  }

  auto count_accepted = [&] { return std::count(accepted.begin(), accepted.end(), true); };
  if (count_accepted() < 3)
  {
    throw PipelineError(PipelineStage::pose_estimation,
                        "fewer than 3 views passed ICP (" + std::to_string(count_accepted()) +
                            " of " + std::to_string(n) + ")");
  }
  auto fit_accepted = [&] {
    PointList origins;
    for (std::size_t i = 0; i < n; ++i)
    {
      if (accepted[i])
      {
        origins.push_back(fitted[i]->translation());
      }
    }
    Circle3D c;
    bool degenerate = false;
    try
    {
      c = fit_circle3d(origins);
    }
    catch (const std::invalid_argument&)
    {
      c.center = centroid(origins);
      c.radius = 0.0;
      c.normal = axis_cam;
      degenerate = true;
    }
    std::vector<double> d(n, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      if (accepted[i])
      {
        d[i] = c.distance(fitted[i]->translation());
        sum += d[i] * d[i];
      }
    }
    const double rms = std::sqrt(sum / static_cast<double>(origins.size()));
    return std::tuple{c, degenerate, rms, d};
  };
  auto [circle, degenerate, rms, dist] = fit_accepted();
  while (rms > params.correspondence_max_dist && count_accepted() > 3)
  {
    std::size_t worst = n;
    for (std::size_t i = 0; i < n; ++i)
    {
      if (accepted[i] && (worst == n || dist[i] > dist[worst]))
      {
        worst = i;
      }
    }
    accepted[worst] = false;
    result.views[worst].demoted = true;
    std::tie(circle, degenerate, rms, dist) = fit_accepted();
  }
  if (rms > params.correspondence_max_dist)
  {
    throw PipelineError(PipelineStage::pose_estimation,
                        "accepted origins do not lie on a circle");
  }
  result.circle = circle;
  result.circle_degenerate = degenerate;
  result.circle_rms = rms;

  std::vector<double> offsets;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (accepted[i])
    {
      offsets.push_back(circle.phase_of(fitted[i]->translation()) - scan.views[i].angle);
    }
  }
  const double delta = circular_mean(offsets);
  const Vec3 spin_axis = degenerate ? axis_cam : circle.normal;

  result.poses.resize(n);
  for (std::size_t j = 0; j < n; ++j)
  {
    if (accepted[j])
    {
      result.poses[j] = {*fitted[j], result.views[j].fitness, PoseSource::icp};
      continue;
    }
    std::size_t k = n;
    double best_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      if (!accepted[i])
      {
        continue;
      }
      const double gap = std::abs(wrapped(scan.views[j].angle - scan.views[i].angle));
      if (k == n || gap < best_gap)
      {
        k = i;
        best_gap = gap;
      }
    }
    const Mat3 r = axis_angle_rotation(spin_axis, scan.views[j].angle - scan.views[k].angle) *
                   fitted[k]->rotation();
    const Vec3 t = degenerate ? circle.center : circle.point_at(scan.views[j].angle + delta);
    result.poses[j] = {RigidPose(project_to_rotation(r), t), 0.0, PoseSource::interpolated};
  }
  return result;
}

// Pose table: one line per view,
//   <view> <r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2> <fitness> <icp|interpolated>
// Lines starting with '#' are comments.
inline void write_pose_table(std::ostream& out, const std::vector<PoseEstimate>& poses)
{
  out << "# view r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2 fitness source\n";
  for (std::size_t i = 0; i < poses.size(); ++i)
  {
    out << i;
    for (const double v : poses[i].pose.to_row_major())
    {
      out << ' ' << util::format_double(v);
    }
    out << ' ' << util::format_double(poses[i].fitness) << ' ' << source_name(poses[i].source)
        << '\n';
  }
}

inline std::vector<PoseEstimate> read_pose_table(std::istream& in)
{
  std::vector<PoseEstimate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;)
    {
      tok.push_back(t);
    }
    const std::string where = "pose table line " + std::to_string(line_no);
    if (tok.size() != 15)
    {
      throw InputError(where + ": expected 15 fields");
    }
    try
    {
      if (util::parse_int<std::size_t>(tok[0]) != out.size())
      {
        throw InputError(where + ": views must be listed in order");
      }
      std::array<double, 12> v{};
      for (std::size_t k = 0; k < 12; ++k)
      {
        v[k] = util::parse_double(tok[k + 1]);
      }
      PoseEstimate e;
      e.pose = RigidPose::from_row_major(v);
      e.fitness = util::parse_double(tok[13]);
      if (tok[14] == "icp")
      {
        e.source = PoseSource::icp;
      }
      else if (tok[14] == "interpolated")
      {
        e.source = PoseSource::interpolated;
      }
      else
      {
        throw InputError(where + ": unknown source '" + tok[14] + "'");
      }
      out.push_back(e);
    }
    catch (const std::invalid_argument& e)
    {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}
}  // namespace contactscan::poseest
