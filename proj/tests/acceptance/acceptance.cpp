// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance <path to contactscan CLI>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "contactscan/analysis/areas.hpp"
#include "contactscan/analysis/distance.hpp"
#include "contactscan/analysis/kmedoids.hpp"
#include "contactscan/analysis/normalize.hpp"
#include "contactscan/analysis/report.hpp"
#include "contactscan/core/geometry.hpp"
#include "contactscan/core/mesh_io.hpp"
#include "contactscan/core/primitives.hpp"
#include "contactscan/diverse/metrics.hpp"
#include "contactscan/diverse/routing.hpp"
#include "contactscan/diverse/table.hpp"
#include "contactscan/fuse/evaluate.hpp"
#include "contactscan/poseest/circle.hpp"
#include "contactscan/poseest/icp.hpp"
#include "contactscan/poseest/pipeline.hpp"
#include "contactscan/reconstruct.hpp"
#include "contactscan/repr/normalize.hpp"
#include "contactscan/repr/sample.hpp"
#include "contactscan/repr/voxel.hpp"
#include "contactscan/synth/contact.hpp"
#include "contactscan/synth/scan.hpp"

namespace fs = std::filesystem;
using namespace contactscan;
using clk = std::chrono::steady_clock;

namespace
{
constexpr double kDeg = std::numbers::pi / 180.0;

std::string cli_path;

class Criterion
{
public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void check(bool ok, const std::string& what)
  {
    if (!ok)
    {
      ok_ = false;
      notes_.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  void abort(const std::string& s)
  {
    ok_ = false;
    notes_.push_back("error: " + s);
  }

  bool report() const
  {
    std::cout << (ok_ ? "PASS" : "FAIL") << " criterion " << id_ << ": " << title_ << '\n';
    for (const auto& n : notes_)
    {
      std::cout << "    " << n << '\n';
    }
    std::cout.flush();
    return ok_;
  }

private:
  int id_;
  std::string title_;
  bool ok_ = true;
  std::vector<std::string> notes_;
};

template <typename... Ts>
std::string str(const Ts&... xs)
{
  std::ostringstream out;
  out.precision(6);
  (out << ... << xs);
  return out.str();
}

double seconds_since(clk::time_point t) { return std::chrono::duration<double>(clk::now() - t).count(); }

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name)
{
  const fs::path d = fs::temp_directory_path() / ("contactscan_acceptance_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const fs::path& cwd, const std::string& args)
{
  const std::string cmd = "cd '" + cwd.string() + "' && '" + cli_path + "' " + args + " >/dev/null 2>'" +
                          (cwd / ".stderr").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------- scans

struct ScanRun
{
  fuse::ReconstructionMetrics metrics;
  double seconds = 0.0;
};

ScanRun scan_and_reconstruct(const std::string& shape, const std::vector<Vec3>& spot_dirs, double inner,
                             double outer, bool noisy)
{
  const auto t0 = clk::now();
  const TriMesh mesh = primitives::make_named(shape);
  const ContactMap gt = synth::directional_spots(mesh, spot_dirs, inner, outer);
  synth::RigConfig rig;
  rig.placement_rotation = axis_angle_rotation(Vec3::UnitZ(), 0.4);
  rig.rest_on_table(mesh);
  synth::NoiseParams noise;
  if (noisy)
  {
    noise.depth_sigma = 0.002;
    noise.thermal_sigma = 0.02;
    noise.ambient_level = 0.1;
    noise.seed = 5;
  }
  const auto scan = synth::simulate_scan(mesh, gt, rig, noise);
  ReconstructOptions opt;
  if (shape == "sphere" || shape == "cylinder" || shape == "torus")
  {
    opt.symmetry = SymmetrySpec::axial_about(Vec3::UnitZ());
  }
  const auto r = reconstruct(scan, mesh, opt);
  ScanRun out;
  out.metrics = fuse::evaluate_reconstruction(mesh, r.fusion.map, r.fusion.coverage, gt, r.poses[0].pose,
                                              *scan.views[0].gt_pose);
  out.seconds = seconds_since(t0);
  return out;
}

const std::vector<std::string> kShapes{"cube", "sphere", "cylinder", "torus", "mug"};

void criterion1(Criterion& c)
{
  const std::vector<Vec3> spots{Vec3(1, 0.3, 0.2), Vec3(-0.5, -1, 0.6), Vec3(0.1, 0.2, 1)};
  for (const bool noisy : {false, true})
  {
    for (const auto& shape : kShapes)
    {
      const ScanRun r = scan_and_reconstruct(shape, spots, 0.006, 0.012, noisy);
      const std::string tag = shape + (noisy ? " noisy" : " noiseless");
      c.note(str(tag, ": IoU ", r.metrics.iou, ", RMSE ", r.metrics.rmse, ", ", r.seconds, " s"));
      if (noisy)
      {
        c.check(r.metrics.iou >= 0.8, tag + " IoU >= 0.8");
      }
      else
      {
        c.check(r.metrics.iou >= 0.9, tag + " IoU >= 0.9");
        c.check(r.metrics.rmse <= 0.05, tag + " RMSE <= 0.05");
      }
      c.check(r.seconds < 60.0, tag + " under 60 s");
    }
  }
}

void criterion2(Criterion& c)
{
  for (const bool noisy : {false, true})
  {
    for (const auto& shape : kShapes)
    {
      const ScanRun r = scan_and_reconstruct(shape, {Vec3(1, 0.3, 0.2)}, 0.0015, 0.0035, noisy);
      const double mm = r.metrics.centroid_error * 1000.0;
      const std::string tag = shape + (noisy ? " noisy" : " noiseless");
      c.note(str(tag, ": centroid error ", mm, " mm"));
      c.check(mm <= (noisy ? 4.4 : 1.0), tag + (noisy ? " centroid <= 4.4 mm" : " centroid <= 1 mm"));
    }
  }
}

// ---------------------------------------------------------------- poses

RigidPose random_pose(std::mt19937_64& rng, double max_angle, double max_shift)
{
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 axis = Vec3(g(rng), g(rng), g(rng)).normalized();
  const Vec3 dir = Vec3(g(rng), g(rng), g(rng)).normalized();
  return RigidPose::from_axis_angle(axis, max_angle * u(rng), max_shift * u(rng) * dir);
}

void criterion3(Criterion& c)
{
  {
    const TriMesh mesh = primitives::make_named("mug", 32);
    const PointList model_points = poseest::surface_samples(mesh, 0.0015);
    const poseest::IcpModel model(model_points);
    std::mt19937_64 rng(31);
    int good = 0;
    bool monotone = true;
    double worst_angle = 0.0;
    double worst_shift = 0.0;
    double init_angle = 0.0;
    double init_shift = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
      const RigidPose truth =
          RigidPose::from_translation(Vec3(0.0, 0.0, 0.6)) * random_pose(rng, std::numbers::pi, 0.05);
      const RigidPose init = truth * random_pose(rng, 10 * kDeg, 0.01);
      init_angle = std::max(init_angle, init.rotation_angle_to(truth));
      init_shift = std::max(init_shift, init.translation_distance_to(truth));
      const auto r = poseest::icp_register(model, transform_points(model_points, truth), init, poseest::IcpParams{});
      for (std::size_t k = 1; k < r.objective.size(); ++k)
      {
        monotone = monotone && r.objective[k] <= r.objective[k - 1];
      }
      const double angle = r.estimate.pose.rotation_angle_to(truth);
      const double shift = r.estimate.pose.translation_distance_to(truth);
      worst_angle = std::max(worst_angle, angle);
      worst_shift = std::max(worst_shift, shift);
      good += angle < 0.5 * kDeg && shift < 0.001;
    }
    c.note(str("ICP: ", good, "/100 trials within 0.5 deg and 1 mm; worst ", worst_angle / kDeg, " deg, ",
               worst_shift * 1000.0, " mm"));
    c.note(str("ICP: largest initial offset ", init_angle / kDeg, " deg, ", init_shift * 1000.0, " mm"));
    c.check(init_angle <= 10 * kDeg && init_shift <= 0.01, "initial poses within 10 deg and 1 cm");
    c.check(good == 100, "all 100 ICP trials converge");
    c.check(monotone, "ICP objective never increases");
  }
  {
    PointList pts;
    for (int i = 0; i < 9; ++i)
    {
      const double a = 2.0 * std::numbers::pi * i / 9;
      pts.emplace_back(0.12 + 0.03 * std::cos(a), -0.05 + 0.03 * std::sin(a), 0.7);
    }
    const auto circle = poseest::fit_circle3d(pts);
    const double e = (circle.center - Vec3(0.12, -0.05, 0.7)).norm();
    c.note(str("circle on exact points: center error ", e, " m, radius ", circle.radius));
    c.check(e <= 1e-9 && std::abs(circle.radius - 0.03) <= 1e-9, "exact circle recovered to 1e-9");

    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 0.001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
      PointList noisy;
      for (const Vec3& p : pts)
      {
        noisy.push_back(p + Vec3(g(rng), g(rng), g(rng)));
      }
      worst = std::max(worst, (poseest::fit_circle3d(noisy).center - Vec3(0.12, -0.05, 0.7)).norm());
    }
    c.note(str("circle under 1 mm noise: worst center error ", worst * 1000.0, " mm over 100 trials"));
    c.check(worst <= 0.002, "noisy circle center within 2 mm");
  }
  {
    TriMesh mesh = primitives::make_named("box");
    synth::RigConfig rig;
    rig.placement_rotation = axis_angle_rotation(Vec3::UnitZ(), 0.4);
    rig.rest_on_table(mesh);
    auto scan = synth::simulate_scan(mesh, ContactMap::constant(mesh, 0.0), rig, {});
    scan.views[4].depth = FloatImage(scan.rig.camera.width, scan.rig.camera.height, 0.0f);
    const auto result = poseest::estimate_scan_poses(scan, mesh, {}, poseest::IcpParams{});
    bool sources = result.poses.size() == scan.views.size();
    for (std::size_t i = 0; sources && i < result.poses.size(); ++i)
    {
      sources = result.poses[i].source == (i == 4 ? poseest::PoseSource::interpolated : poseest::PoseSource::icp);
    }
    c.check(sources, "only the ablated view is interpolated");
    if (result.poses.size() > 4)
    {
      const double off = result.circle.distance(result.poses[4].pose.translation());
      c.note(str("ablated view origin ", off * 1000.0, " mm from the turntable circle"));
      c.check(off <= 0.002, "interpolated origin within 2 mm of the circle");
    }
  }
}

// ---------------------------------------------------------------- analysis

PointList random_points(std::mt19937_64& rng, std::size_t n, double scale = 0.1)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  PointList out;
  for (std::size_t i = 0; i < n; ++i)
  {
    out.emplace_back(u(rng), u(rng), u(rng));
  }
  return out;
}

double brute_set_distance(const PointList& a, const PointList& b)
{
  auto dbar = [](const PointList& p, const PointList& q) {
    double sum = 0.0;
    for (const Vec3& x : p)
    {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& y : q)
      {
        const double dx = x.x() - y.x();
        const double dy = x.y() - y.y();
        const double dz = x.z() - y.z();
        best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
      }
      sum += best;
    }
    return sum;
  };
  return (dbar(a, b) + dbar(b, a)) / static_cast<double>(a.size() + b.size());
}

double medoid_cost(const analysis::DistanceMatrix& d, const std::vector<std::size_t>& medoids)
{
  double cost = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    double best = std::numeric_limits<double>::infinity();
    for (const auto m : medoids)
    {
      best = std::min(best, d(i, m));
    }
    cost += best;
  }
  return cost;
}

void criterion4(Criterion& c)
{
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  int exact = 0;
  bool props = true;
  for (int pair = 0; pair < 200; ++pair)
  {
    const PointList a = random_points(rng, size(rng));
    const PointList b = random_points(rng, size(rng));
    const double d = analysis::set_distance(a, b);
    exact += d == brute_set_distance(a, b);
    props = props && analysis::set_distance(a, a) == 0.0 && analysis::set_distance(b, a) == d;
    PointList a2 = a;
    PointList b2 = b;
    for (Vec3& p : a2)
    {
      p *= 2.5;
    }
    for (Vec3& p : b2)
    {
      p *= 2.5;
    }
    props = props && std::abs(analysis::set_distance(a2, b2) - 2.5 * d) <= 1e-12 * std::max(d, 1e-300);
  }
  c.note(str("set distance: ", exact, "/200 pairs bit-identical to the brute-force definition"));
  c.check(exact == 200, "set distance matches brute force bit-exactly");
  c.check(props, "identity, symmetry and scale linearity");

  int optimal = 0;
  bool monotone = true;
  for (int inst = 0; inst < 300; ++inst)
  {
    const std::size_t n = 3 + inst % 6;
    const PointList pts = random_points(rng, n);
    analysis::DistanceMatrix d(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      for (std::size_t j = i + 1; j < n; ++j)
      {
        d.set(i, j, (pts[i] - pts[j]).norm());
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < n; ++x)
    {
      for (std::size_t y = x + 1; y < n; ++y)
      {
        for (std::size_t z = y + 1; z < n; ++z)
        {
          best = std::min(best, medoid_cost(d, {x, y, z}));
        }
      }
    }
    const auto r = analysis::kmedoids(d, 3, static_cast<std::uint64_t>(inst));
    for (std::size_t k = 1; k < r.cost_history.size(); ++k)
    {
      monotone = monotone && r.cost_history[k] <= r.cost_history[k - 1];
    }
    optimal += std::abs(r.cost - best) <= 1e-12 && std::abs(r.cost - medoid_cost(d, r.medoids)) <= 1e-12;
  }
  c.note(str("k-medoids: ", optimal, "/300 instances (n <= 8, k = 3) match exhaustive search"));
  c.check(optimal == 300, "k-medoids matches exhaustive search");
  c.check(monotone, "k-medoids cost history non-increasing");

  const double pi = std::numbers::pi;
  struct Closed
  {
    std::string name;
    TriMesh mesh;
    double area;
  };
  const std::vector<Closed> shapes{
      {"sphere", primitives::make_icosphere(0.05, 4), 4.0 * pi * 0.05 * 0.05},
      {"cylinder", primitives::make_cylinder(0.03, 0.1, 96, 10, 4), 2.0 * pi * 0.03 * 0.1 + 2.0 * pi * 0.03 * 0.03},
      {"torus", primitives::make_torus(0.04, 0.01, 96, 48), 4.0 * pi * pi * 0.04 * 0.01}};
  for (const auto& s : shapes)
  {
    const double a = analysis::contact_area(s.mesh, ContactMap::constant(s.mesh, 1.0));
    const double rel = std::abs(a - s.area) / s.area;
    c.note(str("contact area of full ", s.name, ": relative error ", rel * 100.0, " %"));
    c.check(rel <= 0.02, s.name + " area within 2%");
  }

  const TriMesh plate = primitives::make_plane_grid(0.1, 0.1, 4, 4);
  std::vector<double> v(plate.num_vertices());
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    v[i] = 0.2 + 0.5 * static_cast<double>(i) / static_cast<double>(v.size() - 1);
  }
  const ContactMap n = analysis::normalize_sigmoid(plate, ContactMap(plate, v));
  c.note(str("sigmoid endpoints ", n[0], " and ", n[v.size() - 1]));
  c.check(n[0] == 0.05 && n[v.size() - 1] == 0.95, "sigmoid endpoints exactly 0.05 and 0.95");
}

// 50 maps, 14 of which touch vertices 4 or 5.
std::vector<ContactMap> handle_cohort(const TriMesh& mesh)
{
  std::vector<ContactMap> cohort;
  for (int i = 0; i < 50; ++i)
  {
    std::vector<double> v(mesh.num_vertices(), 0.1);
    if ((14 * i) % 50 < 14)
    {
      v[4 + static_cast<std::size_t>(i % 2)] = 0.8;
    }
    else
    {
      v[40] = 0.9;
    }
    cohort.emplace_back(mesh, v);
  }
  return cohort;
}

void criterion5(Criterion& c)
{
  const TriMesh mesh = primitives::make_icosphere(0.05, 2);
  const auto cohort = handle_cohort(mesh);
  const analysis::ActiveArea handle{"handle", {3, 4, 5}};
  const std::string direct = analysis::format_percent(analysis::active_area_fraction(mesh, cohort, handle));
  c.note("library: " + direct);
  c.check(direct == "28.00", "library reports 28.00");

  const fs::path w = scratch_dir("c5");
  {
    std::ofstream tsv(w / "cohort.tsv");
    for (std::size_t i = 0; i < cohort.size(); ++i)
    {
      const std::string name = "map" + std::to_string(i) + ".ply";
      save_mesh((w / name).string(), mesh, &cohort[i]);
      tsv << name << "\tflashlight\thandoff\tp" << i << '\n';
    }
    std::ofstream(w / "areas.tsv") << "flashlight\thandle\t3 4 5\n";
  }
  const int code = run_cli(w, "analyze --cohort cohort.tsv --areas areas.tsv --k 3 --out an");
  c.check(code == 0, str("analyze exits 0 (got ", code, ")"));
  const std::string table = slurp(w / "an/active_areas.tsv");
  c.note("cli: " + table.substr(table.find('\n') + 1, table.find('\n', table.find('\n') + 1) - table.find('\n') - 1));
  c.check(table == "area\tintent\tpercent\nhandle\thandoff\t28.00\n", "CLI active area table reports 28.00");
  fs::remove_all(w);
}

// ---------------------------------------------------------------- representations

double distance_to_mesh(const TriMesh& mesh, const Vec3& p)
{
  double best = std::numeric_limits<double>::infinity();
  for (const Face& f : mesh.faces())
  {
    const Vec3 q = closest_point_on_triangle(p, mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]);
    best = std::min(best, (q - p).norm());
  }
  return best;
}

std::vector<std::uint8_t> brute_shell(const repr::VoxelGrid& g)
{
  std::vector<std::uint8_t> out(g.cells.size(), 0);
  const int step[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int k = 0; k < g.res; ++k)
  {
    for (int j = 0; j < g.res; ++j)
    {
      for (int i = 0; i < g.res; ++i)
      {
        if (!g.at(i, j, k))
        {
          continue;
        }
        bool edge = false;
        for (const auto& s : step)
        {
          const int x = i + s[0];
          const int y = j + s[1];
          const int z = k + s[2];
          edge = edge || !g.in_bounds(x, y, z) || !g.at(x, y, z);
        }
        out[g.index(i, j, k)] = edge;
      }
    }
  }
  return out;
}

void criterion6(Criterion& c)
{
  const auto sphere = repr::voxelize_solid(primitives::make_icosphere(24.0 / 64.0, 4), 64);
  const double expected = 4.0 / 3.0 * std::numbers::pi * 24.0 * 24.0 * 24.0;
  const double ratio = static_cast<double>(sphere.grid.count()) / expected;
  c.note(str("sphere r = 24 voxels: ", sphere.grid.count(), " voxels, ", ratio * 100.0, " % of the analytic volume"));
  c.check(std::abs(ratio - 1.0) <= 0.05, "sphere volume within 5%");
  c.check(sphere.watertight, "sphere is watertight");

  c.check(repr::surface_voxels(sphere.grid).cells == brute_shell(sphere.grid), "surface mask matches neighbor scan");
  repr::VoxelGrid full = repr::VoxelGrid::unit_cube(64);
  std::fill(full.cells.begin(), full.cells.end(), std::uint8_t{1});
  c.check(repr::surface_voxels(full).count() == 64u * 64u * 64u - 62u * 62u * 62u, "full grid shell is 64^3 - 62^3");

  for (const TriMesh& mesh : {primitives::make_icosphere(0.05, 2), primitives::make_torus(0.05, 0.02, 24, 12)})
  {
    const auto s = repr::sample_surface(mesh, 3000, 11);
    double worst = 0.0;
    for (const Vec3& p : s.points)
    {
      worst = std::max(worst, distance_to_mesh(mesh, p));
    }
    c.note(str("3000 surface samples: worst distance to mesh ", worst, " m"));
    c.check(s.points.size() == 3000 && worst <= 1e-9, "samples lie on the mesh");
  }

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.05);
  PointList pts;
  for (int i = 0; i < 500; ++i)
  {
    pts.emplace_back(g(rng) + 0.2, 2.0 * g(rng), 0.5 * g(rng) - 1.0);
  }
  const auto once = repr::normalize_unit_cube(pts);
  const auto twice = repr::normalize_unit_cube(once.points);
  double drift = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
  {
    drift = std::max(drift, (twice.points[i] - once.points[i]).norm());
  }
  c.check(drift <= 1e-12 && std::abs(twice.scale - 1.0) <= 1e-12, "unit cube normalization is idempotent");
}

// ---------------------------------------------------------------- hypotheses

double brute_error(const repr::Labels& gt, const std::vector<float>& p)
{
  int wrong = 0;
  for (std::size_t i = 0; i < gt.size(); ++i)
  {
    wrong += (p[i] > 0.5f ? 1 : 0) != (gt[i] ? 1 : 0);
  }
  return 100.0 * wrong / static_cast<double>(gt.size());
}

void criterion7(Criterion& c)
{
  const std::vector<double> errors{5, 3, 9, 1, 7, 8, 2, 6, 4, 10};
  diverse::RoutingParams p;
  p.drop_prob = 0.0;
  const auto w = diverse::smcl_weights(errors, p);
  double sum = 0.0;
  bool shape = w.size() == 10 && w[3] == 0.95;
  for (std::size_t i = 0; i < w.size(); ++i)
  {
    sum += w[i];
    shape = shape && (i == 3 || std::abs(w[i] - 0.05 / 9.0) <= 1e-15);
  }
  c.check(std::abs(sum - 1.0) <= 1e-12, "sMCL weights sum to 1");
  c.check(shape, "sMCL weights are 0.95 and 0.05/9");

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> kdist(1, 10);
  std::uniform_int_distribution<int> ndist(1, 60);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  int agree = 0;
  for (int t = 0; t < 1000; ++t)
  {
    const auto n = static_cast<std::size_t>(ndist(rng));
    repr::Labels gt(n);
    for (auto& l : gt)
    {
      l = u(rng) < 0.3f;
    }
    repr::PredictionSet preds;
    const int k = kdist(rng);
    for (int i = 0; i < k; ++i)
    {
      std::vector<float> m(n);
      for (auto& x : m)
      {
        x = u(rng) < 0.6f ? 0.4f * u(rng) : u(rng);
      }
      preds.maps.push_back(std::move(m));
    }
    std::optional<std::size_t> best;
    double best_e = 0.0;
    for (std::size_t i = 0; i < preds.k(); ++i)
    {
      const bool any = std::any_of(preds.maps[i].begin(), preds.maps[i].end(), [](float x) { return x > 0.5f; });
      const double e = brute_error(gt, preds.maps[i]);
      if (any && (!best || e < best_e))
      {
        best = i;
        best_e = e;
      }
    }
    const auto m = diverse::match_to_closest(gt, preds);
    agree += m.index == best && (!best || m.error == best_e);
  }
  c.note(str("match to closest: ", agree, "/1000 random cases agree with exhaustive search"));
  c.check(agree == 1000, "match to closest agrees with exhaustive search");

  const repr::PredictionSet silent{repr::SampleKind::voxel,
                                   std::vector<std::vector<float>>(10, std::vector<float>(4, 0.2f))};
  const auto none = diverse::match_to_closest(repr::Labels{1, 1, 0, 0}, silent);
  c.check(none.no_contact() && diverse::format_cell(std::nullopt) == "-", "all-empty predictions give '-'");

  diverse::GroundTruth gt;
  std::vector<diverse::ColumnInput> columns;
  for (const auto& spec : diverse::default_table_columns())
  {
    columns.push_back({spec, {}});
  }
  for (const auto& obj : diverse::default_table_objects())
  {
    gt["handoff"][obj] = {repr::Labels{1, 0, 0, 0}};
    gt["use"][obj] = {repr::Labels{1, 0, 0, 0}};
    for (auto& col : columns)
    {
      const bool quiet = col.spec.model == "pointnet" && col.spec.k == 1;
      col.predictions[obj] = repr::PredictionSet{
          repr::SampleKind::voxel,
          {quiet ? std::vector<float>{0.1f, 0.1f, 0.1f, 0.1f} : std::vector<float>{0.9f, 0.9f, 0.1f, 0.1f}}};
    }
  }
  std::ostringstream out;
  diverse::write_error_table(out, diverse::evaluate_table(diverse::default_table_objects(), gt, columns));
  const std::string row = "\t25.00\t-\t25.00\t25.00\t25.00\t25.00\t25.00\t-\t25.00\t25.00\t25.00\t25.00\n";
  const std::string expected =
      "intent\thandoff\thandoff\thandoff\thandoff\thandoff\thandoff\tuse\tuse\tuse\tuse\tuse\tuse\n"
      "strategy\tsMCL (k=1)\tsMCL (k=1)\tsMCL (k=10)\tsMCL (k=10)\tDiverseNet (k=10)\tDiverseNet (k=10)"
      "\tsMCL (k=1)\tsMCL (k=1)\tsMCL (k=10)\tsMCL (k=10)\tDiverseNet (k=10)\tDiverseNet (k=10)\n"
      "model\tVoxNet\tPointNet\tVoxNet\tPointNet\tVoxNet\tPointNet\tVoxNet\tPointNet\tVoxNet\tPointNet\tVoxNet"
      "\tPointNet\n"
      "pan" + row + "wine glass" + row + "mug" + row + "average" + row;
  c.check(out.str() == expected, "error table layout with three header lines and four rows");
}

// ---------------------------------------------------------------- determinism

std::vector<std::string> tree_files(const fs::path& root)
{
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
  {
    if (e.is_regular_file() && e.path().filename() != ".stderr")
    {
      out.push_back(e.path().lexically_relative(root).string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string without_timestamp(const std::string& text)
{
  std::stringstream in(text);
  std::string line;
  std::string out;
  while (std::getline(in, line))
  {
    if (line.rfind("timestamp ", 0) != 0)
    {
      out += line + '\n';
    }
  }
  return out;
}

void criterion8(Criterion& c)
{
  const fs::path w = scratch_dir("c8");
  const fs::path runs[2] = {w / "one", w / "four" / "nested"};
  const int threads[2] = {1, 4};
  for (int r = 0; r < 2; ++r)
  {
    fs::create_directories(runs[r]);
    std::ofstream(runs[r] / "cohort.tsv") << "rec/contact.ply\tmug\tuse\tp0\n"
                                             "s1/object.ply\tmug\thandoff\tp1\n"
                                             "s2/object.ply\tcube\tuse\tp2\n";
    const std::string g = "--seed 11 --threads " + std::to_string(threads[r]) + " ";
    const std::vector<std::string> steps{
        g + "synth --primitive cube --density 16 --noisy --out scan",
        g + "reconstruct --scan scan --out rec",
        g + "synth --primitive cube --density 16 --views 3 --spots 0 1 0 --out s1",
        g + "synth --primitive cube --density 16 --views 3 --spots 0 0 1 --out s2",
        g + "analyze --maps rec/contact.ply s1/object.ply s2/object.ply --k 2 --out an",
        g + "export --cohort cohort.tsv --resolution 24 --points 500 --augment 2 --out ds"};
    for (const auto& s : steps)
    {
      const int code = run_cli(runs[r], s);
      if (code != 0)
      {
        c.abort(str("'", s, "' exited ", code, ": ", slurp(runs[r] / ".stderr")));
        return;
      }
    }
  }
  const auto a = tree_files(runs[0]);
  const auto b = tree_files(runs[1]);
  c.check(a == b, "both runs write the same files");
  int manifests = 0;
  int differing = 0;
  for (const auto& f : a)
  {
    const std::string x = slurp(runs[0] / f);
    const std::string y = slurp(runs[1] / f);
    const bool manifest = fs::path(f).filename() == "run_manifest.txt";
    manifests += manifest;
    const bool same = manifest ? without_timestamp(x) == without_timestamp(y) : x == y;
    if (!same)
    {
      ++differing;
      c.note("differs: " + f);
    }
  }
  c.note(str(a.size(), " files compared, ", manifests, " run manifests, threads 1 vs 4"));
  c.check(manifests == 6, "every command wrote a run manifest");
  c.check(differing == 0, "outputs identical apart from manifest timestamps");
  fs::remove_all(w);
}
}  // namespace

int main(int argc, char** argv)
{
  if (argc < 2)
  {
    std::cerr << "usage: acceptance <contactscan CLI>\n";
    return 2;
  }
  cli_path = fs::absolute(argv[1]).string();

  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"contact map reconstruction on five shapes", criterion1},
      {"hot-spot localization", criterion2},
      {"pose estimation, circle fit and interpolation", criterion3},
      {"set distance, clustering, contact area and normalization", criterion4},
      {"active-area percentage", criterion5},
      {"voxel and point representations", criterion6},
      {"multiple-hypothesis routing and evaluation", criterion7},
      {"determinism across thread counts and directories", criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    Criterion c(static_cast<int>(i + 1), criteria[i].first);
    try
    {
      criteria[i].second(c);
    }
    catch (const std::exception& e)
    {
      c.abort(e.what());
    }
    failed += !c.report();
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
