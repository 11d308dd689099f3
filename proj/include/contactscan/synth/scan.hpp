#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "contactscan/core/error.hpp"
#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/synth/render.hpp"
#include "contactscan/util/format.hpp"
#include "contactscan/util/pfm.hpp"

namespace contactscan::synth
{
/// World-to-camera pose of a camera at `eye` looking at `target`
/// (x right, y down, z forward).
inline RigidPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ())
{
  const Vec3 f = (target - eye).normalized();
  const Vec3 x = f.cross(up).normalized();
  const Vec3 y = f.cross(x);
  Mat3 world_from_cam;
  world_from_cam.col(0) = x;
  world_from_cam.col(1) = y;
  world_from_cam.col(2) = f;
  const Mat3 r = project_to_rotation(world_from_cam.transpose());
  return RigidPose(r, -(r * eye));
}

/// Turntable rig geometry. The world frame has the turntable plane through
/// `turntable_center` with normal `turntable_axis`. The object sits on the
/// table with rotation `placement_rotation`, its origin `turntable_radius`
/// away from the axis and `placement_height` above the plane.
struct RigConfig
{
  int n_views = 9;
  CameraIntrinsics camera;
  RigidPose camera_pose_world = look_at(Vec3(0.0, -0.7 * std::cos(std::numbers::pi / 6),
                                             0.04 + 0.7 * std::sin(std::numbers::pi / 6)),
                                        Vec3(0.0, 0.0, 0.04));
  Vec3 turntable_center = Vec3::Zero();
  Vec3 turntable_axis = Vec3::UnitZ();
  double turntable_radius = 0.03;
  double arc_degrees = 360.0;
  double disk_radius = 0.2;
  Mat3 placement_rotation = Mat3::Identity();
  double placement_height = 0.0;

  void validate() const
  {
    camera.validate();
    if (n_views < 3)
    {
      throw std::invalid_argument("rig needs at least 3 views");
    }
    if (!(turntable_radius >= 0.0))
    {
      throw std::invalid_argument("turntable radius must be non-negative");
    }
    if (std::abs(turntable_axis.norm() - 1.0) > 1e-9)
    {
      throw std::invalid_argument("turntable axis must be unit length");
    }
    if (!(arc_degrees > 0.0 && arc_degrees <= 360.0))
    {
      throw std::invalid_argument("arc must lie in (0, 360] degrees");
    }
    RigidPose(placement_rotation, Vec3::Zero());
  }

  /// Equally spaced stop angles (radians). A full circle does not repeat the
  /// start, so 9 views over 360 degrees are 0, 40, ..., 320 degrees.
  std::vector<double> angles() const
  {
    const double arc = arc_degrees * std::numbers::pi / 180.0;
    const bool full = std::abs(arc_degrees - 360.0) < 1e-12;
    const double step = full ? arc / n_views : arc / (n_views - 1);
    std::vector<double> out;
    for (int i = 0; i < n_views; ++i)
    {
      out.push_back(step * i);
    }
    return out;
  }

  /// Turntable frame (z = axis) expressed in world coordinates.
  RigidPose world_from_turntable() const
  {
    const Vec3 z = turntable_axis.normalized();
    Vec3 ref = Vec3::UnitX() - z * z.x();
    if (ref.norm() < 1e-6)
    {
      ref = Vec3::UnitY() - z * z.y();
    }
    const Vec3 x = ref.normalized();
    Mat3 r;
    r.col(0) = x;
    r.col(1) = z.cross(x);
    r.col(2) = z;
    return RigidPose(project_to_rotation(r), turntable_center);
  }

  /// Object frame -> camera frame with the table turned by `angle`.
  RigidPose object_pose(double angle) const
  {
    const RigidPose spin = RigidPose::from_axis_angle(Vec3::UnitZ(), angle);
    const RigidPose rest(placement_rotation, Vec3(turntable_radius, 0.0, placement_height));
    return camera_pose_world * world_from_turntable() * spin * rest;
  }

  /// Rotation of the table by `delta`, expressed as a camera-frame motion.
  RigidPose turntable_motion(double delta) const
  {
    const RigidPose cam_tt = camera_pose_world * world_from_turntable();
    return cam_tt * RigidPose::from_axis_angle(Vec3::UnitZ(), delta) * cam_tt.inverse();
  }

  /// Turntable axis direction and center in camera coordinates.
  Vec3 axis_in_camera() const { return camera_pose_world.rotate(turntable_axis.normalized()); }
  Vec3 center_in_camera() const { return camera_pose_world.apply(turntable_center); }

  /// Sets placement_height so the lowest vertex touches the table.
  void rest_on_table(const TriMesh& mesh)
  {
    double lowest = std::numeric_limits<double>::infinity();
    for (const Vec3& v : mesh.vertices())
    {
      lowest = std::min(lowest, (placement_rotation * v).z());
    }
    placement_height = -lowest;
  }
};

struct View
{
  FloatImage depth;    // camera-frame z in meters, 0 = no return
  FloatImage thermal;  // [0, 1]
  LabelImage labels;   // simulator hit labels; empty for real captures
  double angle = 0.0;  // radians
  std::optional<RigidPose> gt_pose;
};

struct ScanSequence
{
  RigConfig rig;
  NoiseParams noise;
  std::vector<View> views;
};

/// Flat disk in the turntable plane, in world coordinates.
inline TriMesh make_turntable_disk(const RigConfig& rig, int segments = 96)
{
  std::vector<Vec3> v{Vec3::Zero()};
  std::vector<Face> f;
  for (int s = 0; s < segments; ++s)
  {
    const double a = 2.0 * std::numbers::pi * s / segments;
    v.emplace_back(rig.disk_radius * std::cos(a), rig.disk_radius * std::sin(a), 0.0);
  }
  for (int s = 0; s < segments; ++s)
  {
    f.push_back({0u, static_cast<std::uint32_t>(1 + s),
                 static_cast<std::uint32_t>(1 + (s + 1) % segments)});
  }
  const RigidPose w = rig.world_from_turntable();
  for (Vec3& p : v)
  {
    p = w.apply(p);
  }
  return TriMesh(std::move(v), std::move(f));
}

inline ScanSequence simulate_scan(const TriMesh& mesh, const ContactMap& contact,
                                  const RigConfig& rig, const NoiseParams& noise,
                                  unsigned threads = 1)
{
  rig.validate();
  noise.validate();
  contact.require_mesh(mesh);
  const TriMesh disk = make_turntable_disk(rig);
  ScanSequence scan;
  scan.rig = rig;
  scan.noise = noise;
  const auto angles = rig.angles();
  for (std::size_t i = 0; i < angles.size(); ++i)
  {
    View view;
    view.angle = angles[i];
    view.gt_pose = rig.object_pose(angles[i]);
    const SceneItem scene[2] = {{&mesh, *view.gt_pose, kObject},
                                {&disk, rig.camera_pose_world, kTurntable}};
    const HitBuffer hits = cast_scene(scene, rig.camera, threads);
    view.depth = depth_image(hits, noise.depth_sigma, util::derive_seed(noise.seed, 2 * i));
    view.thermal = thermal_image(hits, 0, mesh, contact, noise,
                                 util::derive_seed(noise.seed, 2 * i + 1));
    view.labels = label_image(scene, hits);
    scan.views.push_back(std::move(view));
  }
  return scan;
}

// --- On-disk layout -------------------------------------------------------
//
// <dir>/scan.txt                  metadata, one "key values..." record per line
// <dir>/view_NNN_depth.pfm        depth (m) as grayscale PFM
// <dir>/view_NNN_thermal.pfm      thermal intensity as grayscale PFM
// <dir>/view_NNN_labels.pgm       simulator hit labels (optional)
//
// scan.txt records:
//   contactscan_scan 1
//   n_views <int>
//   camera <fx> <fy> <cx> <cy> <width> <height>
//   camera_pose_world <12 floats, row-major R | t>
//   turntable_center <x> <y> <z>
//   turntable_axis <x> <y> <z>
//   turntable_radius <r>
//   arc_degrees <deg>
//   disk_radius <r>
//   placement_rotation <9 floats, row-major>
//   placement_height <h>
//   noise <depth_sigma> <thermal_sigma> <ambient_level> <seed>
//   view <index> <angle_rad> <has_gt 0|1> [<12 floats gt pose>]
// Floats are written in shortest round-trip form.

namespace scan_detail
{
inline std::string view_file(int i, const char* kind, const char* ext)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "view_%03d_%s.%s", i, kind, ext);
  return buf;
}

inline void put(std::ostream& out, const Vec3& v)
{
  out << ' ' << util::format_double(v.x()) << ' ' << util::format_double(v.y()) << ' '
      << util::format_double(v.z());
}

inline void put(std::ostream& out, const RigidPose& p)
{
  for (const double x : p.to_row_major())
  {
    out << ' ' << util::format_double(x);
  }
}
}  // namespace scan_detail

inline void save_scan(const std::filesystem::path& dir, const ScanSequence& scan)
{
  using namespace scan_detail;
  std::filesystem::create_directories(dir);
  std::ofstream meta(dir / "scan.txt", std::ios::binary);
  if (!meta)
  {
    throw InputError("cannot write scan metadata in '" + dir.string() + "'");
  }
  const RigConfig& rig = scan.rig;
  meta << "contactscan_scan 1\n";
  meta << "n_views " << scan.views.size() << '\n';
  meta << "camera " << util::format_double(rig.camera.fx) << ' '
       << util::format_double(rig.camera.fy) << ' ' << util::format_double(rig.camera.cx) << ' '
       << util::format_double(rig.camera.cy) << ' ' << rig.camera.width << ' '
       << rig.camera.height << '\n';
  meta << "camera_pose_world";
  put(meta, rig.camera_pose_world);
  meta << "\nturntable_center";
  put(meta, rig.turntable_center);
  meta << "\nturntable_axis";
  put(meta, rig.turntable_axis);
  meta << "\nturntable_radius " << util::format_double(rig.turntable_radius) << '\n';
  meta << "arc_degrees " << util::format_double(rig.arc_degrees) << '\n';
  meta << "disk_radius " << util::format_double(rig.disk_radius) << '\n';
  meta << "placement_rotation";
  for (int r = 0; r < 3; ++r)
  {
    for (int c = 0; c < 3; ++c)
    {
      meta << ' ' << util::format_double(rig.placement_rotation(r, c));
    }
  }
  meta << "\nplacement_height " << util::format_double(rig.placement_height) << '\n';
  meta << "noise " << util::format_double(scan.noise.depth_sigma) << ' '
       << util::format_double(scan.noise.thermal_sigma) << ' '
       << util::format_double(scan.noise.ambient_level) << ' ' << scan.noise.seed << '\n';
  for (std::size_t i = 0; i < scan.views.size(); ++i)
  {
    const View& v = scan.views[i];
    meta << "view " << i << ' ' << util::format_double(v.angle) << ' ' << (v.gt_pose ? 1 : 0);
    if (v.gt_pose)
    {
      put(meta, *v.gt_pose);
    }
    meta << '\n';
    const int idx = static_cast<int>(i);
    util::write_pfm((dir / view_file(idx, "depth", "pfm")).string(), v.depth);
    util::write_pfm((dir / view_file(idx, "thermal", "pfm")).string(), v.thermal);
    if (!v.labels.empty())
    {
      util::write_pgm((dir / view_file(idx, "labels", "pgm")).string(), v.labels);
    }
  }
  if (!meta)
  {
    throw InputError("failed writing scan metadata in '" + dir.string() + "'");
  }
}

inline ScanSequence load_scan(const std::filesystem::path& dir)
{
  using namespace scan_detail;
  const auto meta_path = dir / "scan.txt";
  std::ifstream meta(meta_path);
  if (!meta)
  {
    throw InputError("cannot open scan metadata '" + meta_path.string() + "'");
  }
  ScanSequence scan;
  RigConfig& rig = scan.rig;
  std::size_t n_views = 0;
  bool versioned = false;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw InputError(meta_path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(meta, line))
  {
    ++line_no;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key.empty())
    {
      continue;
    }
    std::vector<std::string> tok;
    for (std::string t; ss >> t;)
    {
      tok.push_back(t);
    }
    auto num = [&](std::size_t k) {
      if (k >= tok.size())
      {
        fail("missing value for '" + key + "'");
      }
      try
      {
        return util::parse_double(tok[k]);
      }
      catch (const std::invalid_argument& e)
      {
        fail(e.what());
      }
      return 0.0;
    };
    auto vec = [&](std::size_t k) { return Vec3(num(k), num(k + 1), num(k + 2)); };
    auto pose = [&](std::size_t k) {
      std::array<double, 12> v{};
      for (std::size_t j = 0; j < 12; ++j)
      {
        v[j] = num(k + j);
      }
      try
      {
        return RigidPose::from_row_major(v);
      }
      catch (const std::invalid_argument& e)
      {
        fail(e.what());
      }
      return RigidPose();
    };
    if (key == "contactscan_scan")
    {
      if (num(0) != 1.0)
      {
        fail("unsupported scan format version");
      }
      versioned = true;
    }
    else if (key == "n_views")
    {
      n_views = static_cast<std::size_t>(num(0));
    }
    else if (key == "camera")
    {
      rig.camera = {num(0), num(1), num(2), num(3), static_cast<int>(num(4)),
                    static_cast<int>(num(5))};
    }
    else if (key == "camera_pose_world")
    {
      rig.camera_pose_world = pose(0);
    }
    else if (key == "turntable_center")
    {
      rig.turntable_center = vec(0);
    }
    else if (key == "turntable_axis")
    {
      rig.turntable_axis = vec(0);
    }
    else if (key == "turntable_radius")
    {
      rig.turntable_radius = num(0);
    }
    else if (key == "arc_degrees")
    {
      rig.arc_degrees = num(0);
    }
    else if (key == "disk_radius")
    {
      rig.disk_radius = num(0);
    }
    else if (key == "placement_rotation")
    {
      for (int r = 0; r < 3; ++r)
      {
        for (int c = 0; c < 3; ++c)
        {
          rig.placement_rotation(r, c) = num(static_cast<std::size_t>(r * 3 + c));
        }
      }
    }
    else if (key == "placement_height")
    {
      rig.placement_height = num(0);
    }
    else if (key == "noise")
    {
      scan.noise.depth_sigma = num(0);
      scan.noise.thermal_sigma = num(1);
      scan.noise.ambient_level = num(2);
      if (tok.size() < 4)
      {
        fail("missing noise seed");
      }
      scan.noise.seed = util::parse_int<std::uint64_t>(tok[3]);
    }
    else if (key == "view")
    {
      const auto index = static_cast<std::size_t>(num(0));
      if (index != scan.views.size())
      {
        fail("views must be listed in order");
      }
      View v;
      v.angle = num(1);
      if (num(2) != 0.0)
      {
        v.gt_pose = pose(3);
      }
      scan.views.push_back(std::move(v));
    }
    else
    {
      fail("unknown key '" + key + "'");
    }
  }
  if (!versioned)
  {
    throw InputError(meta_path.string() + ": missing format header");
  }
  if (scan.views.size() != n_views || n_views == 0)
  {
    throw InputError(meta_path.string() + ": view count mismatch");
  }
  rig.n_views = static_cast<int>(n_views);
  try
  {
    rig.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw InputError(meta_path.string() + ": " + e.what());
  }
  for (std::size_t i = 0; i < scan.views.size(); ++i)
  {
    View& v = scan.views[i];
    const int idx = static_cast<int>(i);
    v.depth = util::read_pfm((dir / view_file(idx, "depth", "pfm")).string());
    v.thermal = util::read_pfm((dir / view_file(idx, "thermal", "pfm")).string());
    const auto labels = dir / view_file(idx, "labels", "pgm");
    if (std::filesystem::exists(labels))
    {
      v.labels = util::read_pgm(labels.string());
    }
    if (v.depth.width() != rig.camera.width || v.depth.height() != rig.camera.height ||
        v.thermal.width() != rig.camera.width || v.thermal.height() != rig.camera.height)
    {
      throw InputError(dir.string() + ": view " + std::to_string(i) +
                       " image size differs from the camera");
    }
    if (i > 0 && !(v.angle > scan.views[i - 1].angle))
    {
      throw InputError(dir.string() + ": view angles must increase");
    }
  }
  return scan;
}
}  // namespace contactscan::synth
