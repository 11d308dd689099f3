#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "contactscan/analysis/areas.hpp"
#include "contactscan/analysis/kmedoids.hpp"
#include "contactscan/analysis/normalize.hpp"
#include "contactscan/analysis/report.hpp"
#include "contactscan/core/error.hpp"
#include "contactscan/core/mesh_io.hpp"
#include "contactscan/core/primitives.hpp"
#include "contactscan/diverse/table.hpp"
#include "contactscan/reconstruct.hpp"
#include "contactscan/repr/features.hpp"
#include "contactscan/repr/io.hpp"
#include "contactscan/synth/contact.hpp"
#include "contactscan/util/format.hpp"
#include "contactscan/util/rng.hpp"

namespace
{
namespace fs = std::filesystem;
using namespace contactscan;

constexpr const char* kRunManifest = "run_manifest.txt";

constexpr double kNoisyDepthSigma = 0.002;
constexpr double kNoisyThermalSigma = 0.02;
constexpr double kNoisyAmbient = 0.1;

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Globals
{
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  unsigned workers() const
  {
    return threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  }
};

struct Run
{
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> notes;
};

void require_file(const std::string& path, const std::string& what)
{
  if (path.empty())
  {
    throw UsageError(what + " path is required");
  }
  if (!fs::is_regular_file(path))
  {
    throw InputError(what + " not found: " + path);
  }
}

void require_dir(const std::string& path, const std::string& what)
{
  if (path.empty())
  {
    throw UsageError(what + " path is required");
  }
  if (!fs::is_directory(path))
  {
    throw InputError(what + " not found: " + path);
  }
}

void make_output_dir(const std::string& path)
{
  if (path.empty())
  {
    throw UsageError("--out is required");
  }
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path))
  {
    throw InputError("cannot create output directory " + path);
  }
}

std::ofstream open_output(const fs::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw InputError("cannot write " + path.string());
  }
  return out;
}

std::string option_value(const CLI::Option* o)
{
  if (o->count() == 0)
  {
    return o->get_default_str();
  }
  std::string s;
  for (const auto& r : o->results())
  {
    s += (s.empty() ? "" : " ") + r;
  }
  return s;
}

std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Every file below `dir` except the run manifest, sorted.
std::vector<std::string> list_outputs(const fs::path& dir)
{
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
  {
    if (e.is_regular_file() && e.path().filename() != kRunManifest)
    {
      out.push_back(e.path().lexically_relative(dir).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Key-value lines. The thread count is not recorded: outputs do not depend
// on it. Only the timestamp line changes between identical runs.
void write_run_manifest(const fs::path& dir, const Globals& g, const CLI::App& sub, const Run& run)
{
  const auto outputs = list_outputs(dir);
  std::ofstream out = open_output(dir / kRunManifest);
  out << "contactscan_run 1\n";
  out << "version " << CONTACTSCAN_VERSION << '\n';
  out << "command " << sub.get_name() << '\n';
  out << "config " << (g.config.empty() ? "-" : g.config) << '\n';
  out << "seed " << g.seed << '\n';
  for (const CLI::Option* o : sub.get_options())
  {
    if (o->get_single_name() == "help")
    {
      continue;
    }
    out << "option " << o->get_single_name() << ' ' << option_value(o) << '\n';
  }
  for (const auto& [k, v] : run.notes)
  {
    out << "note " << k << ' ' << v << '\n';
  }
  for (const auto& p : run.inputs)
  {
    out << "input " << p << '\n';
  }
  for (const auto& p : outputs)
  {
    out << "output " << (dir / p).generic_string() << '\n';
  }
  out << "timestamp " << utc_timestamp() << '\n';
}

Vec3 to_vec3(const std::vector<double>& v, const std::string& what)
{
  if (v.size() != 3)
  {
    throw UsageError(what + " needs three components");
  }
  const Vec3 out(v[0], v[1], v[2]);
  if (!(out.norm() > 0.0))
  {
    throw UsageError(what + " must be nonzero");
  }
  return out.normalized();
}

SymmetrySpec make_symmetry(const std::string& kind, const std::vector<double>& axis, int angles)
{
  if (kind == "none")
  {
    return {};
  }
  return SymmetrySpec::axial_about(to_vec3(axis, "--axis"), angles);
}

MeshWithContact load_map(const std::string& path)
{
  require_file(path, "contact map");
  MeshWithContact m = load_contact_mesh(path);
  if (!m.contact)
  {
    throw InputError(path + ": mesh has no per-vertex contact property");
  }
  return m;
}

// --- cohort files ---------------------------------------------------------
//
// Tab-separated, '#' starts a comment:
//   map  object  intent  [participant  [bimanual  hand_length]]
// Map paths are relative to the cohort file.

struct CohortRow
{
  std::string path;
  std::string object;
  analysis::Intent intent = analysis::Intent::use;
  std::string participant;
  bool has_hand = false;
  bool bimanual = false;
  double hand_length = 0.0;
};

std::vector<std::string> split_tabs(const std::string& line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, '\t'))
  {
    out.push_back(f);
  }
  return out;
}

std::vector<CohortRow> read_cohort(const std::string& path)
{
  require_file(path, "cohort file");
  std::ifstream in(path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<CohortRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    const auto f = split_tabs(line);
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (f.size() < 3 || f.size() > 6 || f.size() == 5)
    {
      throw InputError(where + "expected map, object, intent [, participant [, bimanual, hand_length]]");
    }
    CohortRow r;
    r.path = fs::path(f[0]).is_absolute() ? f[0] : (base / f[0]).generic_string();
    r.object = f[1];
    try
    {
      r.intent = analysis::parse_intent(f[2]);
      r.participant = f.size() > 3 ? f[3] : "s" + std::to_string(rows.size());
      if (f.size() == 6)
      {
        r.has_hand = true;
        r.bimanual = util::parse_int<int>(f[4]) != 0;
        r.hand_length = util::parse_double(f[5]);
      }
    }
    catch (const std::exception& e)
    {
      throw InputError(where + e.what());
    }
    if (r.object.empty())
    {
      throw InputError(where + "empty object name");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty())
  {
    throw InputError(path + ": cohort is empty");
  }
  return rows;
}

// --- synth ----------------------------------------------------------------

struct SynthArgs
{
  std::string mesh;
  std::string primitive;
  std::string out;
  double density = 64.0;
  std::vector<double> spots{1.0, 0.3, 0.2, -0.5, -1.0, 0.6, 0.1, 0.2, 1.0};
  double spot_inner = 0.006;
  double spot_outer = 0.012;
  int views = 9;
  double arc = 360.0;
  double radius = 0.03;
  double yaw = 0.0;
  bool noisy = false;
  double depth_sigma = 0.0;
  double thermal_sigma = 0.0;
  double ambient = 0.0;
  CLI::Option* depth_opt = nullptr;
  CLI::Option* thermal_opt = nullptr;
  CLI::Option* ambient_opt = nullptr;
};

void add_synth(CLI::App& sub, SynthArgs& a)
{
  sub.add_option("--mesh", a.mesh, "PLY mesh with a per-vertex contact property");
  sub.add_option("--primitive", a.primitive, "built-in shape instead of --mesh")
      ->check(CLI::IsMember({"cube", "box", "sphere", "cylinder", "torus", "mug"}));
  sub.add_option("--out", a.out, "scan directory to write");
  sub.add_option("--density", a.density, "primitive vertices per cm^2")->check(CLI::PositiveNumber);
  sub.add_option("--spots", a.spots, "primitive spot directions, x y z per spot");
  sub.add_option("--spot-inner", a.spot_inner, "spot full-contact radius (m)");
  sub.add_option("--spot-outer", a.spot_outer, "spot outer radius (m)");
  sub.add_option("--views", a.views, "turntable stops")->check(CLI::Range(3, 360));
  sub.add_option("--arc", a.arc, "turntable arc (degrees)");
  sub.add_option("--turntable-radius", a.radius, "object offset from the turntable axis (m)");
  sub.add_option("--yaw", a.yaw, "object rotation on the table (degrees)");
  sub.add_flag("--noisy", a.noisy, "noise preset: depth 2 mm, thermal 0.02, ambient 0.1");
  a.depth_opt = sub.add_option("--depth-sigma", a.depth_sigma, "depth noise (m)");
  a.thermal_opt = sub.add_option("--thermal-sigma", a.thermal_sigma, "thermal noise");
  a.ambient_opt = sub.add_option("--ambient", a.ambient, "thermal level of untouched surface");
}

void cmd_synth(const SynthArgs& a, const Globals& g, Run& run)
{
  if (a.mesh.empty() == a.primitive.empty())
  {
    throw UsageError("synth needs exactly one of --mesh or --primitive");
  }
  MeshWithContact obj;
  if (!a.mesh.empty())
  {
    obj = load_map(a.mesh);
    run.inputs.push_back(a.mesh);
  }
  else
  {
    if (a.spots.empty() || a.spots.size() % 3 != 0)
    {
      throw UsageError("--spots needs x y z per spot");
    }
    obj.mesh = primitives::make_named(a.primitive, a.density);
    std::vector<Vec3> dirs;
    for (std::size_t i = 0; i < a.spots.size(); i += 3)
    {
      dirs.push_back(to_vec3({a.spots[i], a.spots[i + 1], a.spots[i + 2]}, "spot direction"));
    }
    obj.contact = synth::directional_spots(obj.mesh, dirs, a.spot_inner, a.spot_outer);
  }

  synth::RigConfig rig;
  rig.n_views = a.views;
  rig.arc_degrees = a.arc;
  rig.turntable_radius = a.radius;
  rig.placement_rotation = axis_angle_rotation(Vec3::UnitZ(), a.yaw * std::numbers::pi / 180.0);
  rig.rest_on_table(obj.mesh);

  synth::NoiseParams noise;
  noise.depth_sigma = a.depth_opt->count() || !a.noisy ? a.depth_sigma : kNoisyDepthSigma;
  noise.thermal_sigma = a.thermal_opt->count() || !a.noisy ? a.thermal_sigma : kNoisyThermalSigma;
  noise.ambient_level = a.ambient_opt->count() || !a.noisy ? a.ambient : kNoisyAmbient;
  noise.seed = g.seed;
  run.notes.emplace_back("noise", util::format_double(noise.depth_sigma) + " " +
                                      util::format_double(noise.thermal_sigma) + " " +
                                      util::format_double(noise.ambient_level));

  const auto scan = synth::simulate_scan(obj.mesh, *obj.contact, rig, noise, g.workers());
  make_output_dir(a.out);
  synth::save_scan(a.out, scan);
  save_mesh((fs::path(a.out) / "object.ply").string(), obj.mesh, &*obj.contact);
}

// --- reconstruct ----------------------------------------------------------

struct ReconstructArgs
{
  std::string scan;
  std::string mesh;
  std::string ground_truth;
  std::string out;
  bool no_refine = false;
  bool no_ambient = false;
  std::string symmetry = "none";
  std::vector<double> axis{0.0, 0.0, 1.0};
  int sym_angles = 36;
  int icp_iterations = 60;
  double icp_max_dist = 0.01;
  double fitness_threshold = 0.7;
  double height_eps = 0.002;
  double depth_eps = 0.006;
  int refine_iterations = 3;
  double iou_threshold = 0.4;
};

void add_reconstruct(CLI::App& sub, ReconstructArgs& a)
{
  sub.add_option("--scan", a.scan, "scan directory");
  sub.add_option("--mesh", a.mesh, "object mesh (default: <scan>/object.ply)");
  sub.add_option("--ground-truth", a.ground_truth, "PLY with the true contact map (default: the mesh's own)");
  sub.add_option("--out", a.out, "output directory");
  sub.add_flag("--no-refine", a.no_refine, "skip photometric pose refinement");
  sub.add_flag("--no-ambient", a.no_ambient, "keep the scan's ambient thermal level");
  sub.add_option("--symmetry", a.symmetry, "object symmetry")->check(CLI::IsMember({"none", "axial"}));
  sub.add_option("--axis", a.axis, "symmetry axis in the object frame")->expected(3);
  sub.add_option("--symmetry-angles", a.sym_angles, "test angles about the symmetry axis")
      ->check(CLI::PositiveNumber);
  sub.add_option("--icp-iterations", a.icp_iterations, "ICP iteration cap")->check(CLI::PositiveNumber);
  sub.add_option("--icp-max-dist", a.icp_max_dist, "ICP correspondence distance (m)");
  sub.add_option("--fitness-threshold", a.fitness_threshold, "minimum ICP fitness for an accepted view");
  sub.add_option("--height-eps", a.height_eps, "segmentation height above the table (m)");
  sub.add_option("--depth-eps", a.depth_eps, "visibility depth tolerance (m)");
  sub.add_option("--refine-iterations", a.refine_iterations, "refinement outer iterations")
      ->check(CLI::PositiveNumber);
  sub.add_option("--iou-threshold", a.iou_threshold, "contact threshold for IoU and centroid");
}

void cmd_reconstruct(const ReconstructArgs& a, const Globals& g, Run& run)
{
  require_dir(a.scan, "scan directory");
  require_file((fs::path(a.scan) / "scan.txt").string(), "scan metadata");
  const std::string mesh_path = a.mesh.empty() ? (fs::path(a.scan) / "object.ply").string() : a.mesh;
  require_file(mesh_path, "mesh");
  const MeshWithContact obj = load_contact_mesh(mesh_path);
  std::optional<ContactMap> gt = obj.contact;
  if (!a.ground_truth.empty())
  {
    MeshWithContact g_mesh = load_map(a.ground_truth);
    if (g_mesh.mesh.num_vertices() != obj.mesh.num_vertices())
    {
      throw InputError(a.ground_truth + ": vertex count differs from " + mesh_path);
    }
    gt = ContactMap(obj.mesh, g_mesh.contact->values());
    run.inputs.push_back(a.ground_truth);
  }
  const synth::ScanSequence scan = synth::load_scan(a.scan);
  run.inputs.push_back(a.scan);
  run.inputs.push_back(mesh_path);

  ReconstructOptions opt;
  opt.icp.max_iterations = a.icp_iterations;
  opt.icp.correspondence_max_dist = a.icp_max_dist;
  opt.icp.fitness_threshold = a.fitness_threshold;
  opt.pose.height_eps = a.height_eps;
  opt.pose.seed = g.seed;
  opt.fusion.depth_eps = a.depth_eps;
  opt.fusion.threads = g.workers();
  opt.refine.enabled = !a.no_refine;
  opt.refine.max_outer_iters = a.refine_iterations;
  opt.symmetry = make_symmetry(a.symmetry, a.axis, a.sym_angles);
  opt.subtract_ambient = !a.no_ambient;
  run.notes.emplace_back("refine", opt.refine.enabled ? "on" : "off");

  const ReconstructResult r = reconstruct(scan, obj.mesh, opt);

  make_output_dir(a.out);
  const fs::path out(a.out);
  save_mesh((out / "contact.ply").string(), obj.mesh, &r.fusion.map);
  {
    auto f = open_output(out / "poses.txt");
    poseest::write_pose_table(f, r.poses);
  }
  {
    auto f = open_output(out / "coverage.txt");
    fuse::write_coverage(f, r.fusion.coverage);
  }
  std::size_t interpolated = 0;
  for (const auto& p : r.poses)
  {
    interpolated += p.source == poseest::PoseSource::interpolated;
  }
  auto f = open_output(out / "metrics.txt");
  f << "views " << r.poses.size() << '\n';
  f << "icp_views " << r.poses.size() - interpolated << '\n';
  f << "interpolated_views " << interpolated << '\n';
  f << "vertices " << obj.mesh.num_vertices() << '\n';
  f << "covered_vertices " << obj.mesh.num_vertices() - r.fusion.uncovered.size() << '\n';
  f << "refine " << (opt.refine.enabled ? "on" : "off") << '\n';
  for (std::size_t i = 0; i < r.refine_residual.size(); ++i)
  {
    f << "refine_residual " << i << ' ' << util::format_double(r.refine_residual[i]) << '\n';
  }
  if (gt && !scan.views.empty() && scan.views[0].gt_pose)
  {
    const auto m = fuse::evaluate_reconstruction(obj.mesh, r.fusion.map, r.fusion.coverage, *gt,
                                                 r.poses[0].pose, *scan.views[0].gt_pose, a.iou_threshold);
    f << "iou " << util::format_double(m.iou) << '\n';
    f << "rmse " << util::format_double(m.rmse) << '\n';
    f << "centroid_error_m " << util::format_double(m.centroid_error) << '\n';
  }
}

// --- analyze --------------------------------------------------------------

struct AnalyzeArgs
{
  std::vector<std::string> maps;
  std::string cohort;
  std::string areas;
  std::string out;
  int k = 3;
  double threshold = 0.4;
  double sigmoid_low = 0.05;
  double sigmoid_high = 0.95;
  bool no_normalize = false;
  std::string symmetry = "none";
  std::vector<double> axis{0.0, 0.0, 1.0};
  int sym_angles = 36;
  int restarts = 32;
};

void add_analyze(CLI::App& sub, AnalyzeArgs& a)
{
  sub.add_option("--maps", a.maps, "contact-map PLY files");
  sub.add_option("--cohort", a.cohort, "cohort table instead of --maps");
  sub.add_option("--areas", a.areas, "active areas: object, area, vertex indices");
  sub.add_option("--out", a.out, "report directory");
  sub.add_option("--k", a.k, "clusters")->check(CLI::PositiveNumber);
  sub.add_option("--threshold", a.threshold, "contact threshold");
  sub.add_option("--sigmoid-low", a.sigmoid_low, "normalized value of the map minimum");
  sub.add_option("--sigmoid-high", a.sigmoid_high, "normalized value of the map maximum");
  sub.add_flag("--no-normalize", a.no_normalize, "threshold raw maps");
  sub.add_option("--symmetry", a.symmetry, "object symmetry")->check(CLI::IsMember({"none", "axial"}));
  sub.add_option("--axis", a.axis, "symmetry axis in the object frame")->expected(3);
  sub.add_option("--symmetry-angles", a.sym_angles, "alignment angles")->check(CLI::PositiveNumber);
  sub.add_option("--restarts", a.restarts, "seeded k-medoids restarts")->check(CLI::NonNegativeNumber);
}

struct LoadedMap
{
  CohortRow row;
  std::string name;
  MeshWithContact data;
  ContactMap map;  // normalized unless disabled
};

std::vector<std::pair<std::string, analysis::ActiveArea>> read_areas(const std::string& path)
{
  require_file(path, "areas file");
  std::ifstream in(path);
  std::vector<std::pair<std::string, analysis::ActiveArea>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    const auto f = split_tabs(line);
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (f.size() != 3)
    {
      throw InputError(where + "expected object, area, vertex indices");
    }
    analysis::ActiveArea area;
    area.name = f[1];
    std::stringstream ss(f[2]);
    std::string tok;
    while (ss >> tok)
    {
      try
      {
        area.vertices.push_back(util::parse_int<std::uint32_t>(tok));
      }
      catch (const std::exception&)
      {
        throw InputError(where + "bad vertex index '" + tok + "'");
      }
    }
    out.emplace_back(f[0], std::move(area));
  }
  return out;
}

void cmd_analyze(const AnalyzeArgs& a, const Globals& g, Run& run)
{
  if (a.maps.empty() == a.cohort.empty())
  {
    throw UsageError("analyze needs exactly one of --maps or --cohort");
  }
  std::vector<CohortRow> rows;
  if (!a.cohort.empty())
  {
    rows = read_cohort(a.cohort);
    run.inputs.push_back(a.cohort);
  }
  else
  {
    for (const auto& p : a.maps)
    {
      CohortRow r;
      r.path = p;
      r.object = fs::path(p).stem().string();
      r.participant = r.object;
      rows.push_back(r);
    }
  }
  analysis::AnalysisConfig cfg;
  cfg.contact_threshold = a.threshold;
  cfg.sigmoid_low = a.sigmoid_low;
  cfg.sigmoid_high = a.sigmoid_high;
  cfg.k = a.k;
  cfg.n_sym_angles = a.sym_angles;
  cfg.validate();

  std::vector<LoadedMap> maps;
  for (const auto& r : rows)
  {
    MeshWithContact m = load_map(r.path);
    run.inputs.push_back(r.path);
    ContactMap c = *m.contact;
    if (!a.no_normalize)
    {
      try
      {
        c = analysis::normalize_sigmoid(m.mesh, c, cfg);
      }
      catch (const std::invalid_argument&)
      {
        throw InputError(r.path + ": constant contact map cannot be normalized");
      }
    }
    maps.push_back({r, fs::path(r.path).stem().string(), std::move(m), std::move(c)});
  }

  std::vector<analysis::ContactPointSet> sets;
  for (const auto& m : maps)
  {
    sets.push_back(analysis::contact_points(m.data.mesh, m.map, cfg));
    if (sets.back().points.empty())
    {
      throw InputError(m.row.path + ": no vertex above the contact threshold");
    }
  }
  if (static_cast<std::size_t>(a.k) > maps.size())
  {
    throw InputError("k = " + std::to_string(a.k) + " exceeds the number of maps (" +
                     std::to_string(maps.size()) + ")");
  }
  const auto sym = make_symmetry(a.symmetry, a.axis, a.sym_angles);
  const auto d = analysis::contact_distances(sets, sym, a.sym_angles, g.workers());
  const auto km = analysis::kmedoids(d, static_cast<std::size_t>(a.k), g.seed, a.restarts);
  const std::size_t dominant = analysis::dominant_map(d, static_cast<std::size_t>(a.k), g.seed, a.restarts);

  make_output_dir(a.out);
  const fs::path out(a.out);
  {
    auto f = open_output(out / "distances.tsv");
    f << "map";
    for (const auto& m : maps)
    {
      f << '\t' << m.name;
    }
    f << '\n';
    for (std::size_t i = 0; i < maps.size(); ++i)
    {
      f << maps[i].name;
      for (std::size_t j = 0; j < maps.size(); ++j)
      {
        f << '\t' << util::format_double(d(i, j));
      }
      f << '\n';
    }
  }
  {
    auto f = open_output(out / "clusters.tsv");
    f << "map\tcluster\tmedoid\tdistance\n";
    for (std::size_t i = 0; i < maps.size(); ++i)
    {
      const std::size_t c = km.assignments[i];
      f << maps[i].name << '\t' << c << '\t' << maps[km.medoids[c]].name << '\t'
        << util::format_double(d(i, km.medoids[c])) << '\n';
    }
  }
  {
    auto f = open_output(out / "summary.txt");
    f << "maps " << maps.size() << '\n';
    f << "k " << a.k << '\n';
    f << "cost " << util::format_double(km.cost) << '\n';
    f << "medoids";
    for (const auto m : km.medoids)
    {
      f << ' ' << maps[m].name;
    }
    f << "\ndominant " << maps[dominant].name << '\n';
  }
  {
    auto f = open_output(out / "contact_area.tsv");
    f << "map\tobject\tintent\tarea_cm2\n";
    for (const auto& m : maps)
    {
      f << m.name << '\t' << m.row.object << '\t' << analysis::intent_name(m.row.intent) << '\t'
        << util::format_fixed(analysis::contact_area(m.data.mesh, m.map, cfg) * 1e4, 4) << '\n';
    }
  }
  if (!a.areas.empty())
  {
    const auto areas = read_areas(a.areas);
    run.inputs.push_back(a.areas);
    std::vector<analysis::ActiveAreaRow> table;
    for (const auto& [object, area] : areas)
    {
      for (const auto intent : {analysis::Intent::use, analysis::Intent::handoff})
      {
        std::vector<ContactMap> group;
        const TriMesh* mesh = nullptr;
        for (const auto& m : maps)
        {
          if (m.row.object == object && m.row.intent == intent)
          {
            if (mesh && mesh->num_vertices() != m.data.mesh.num_vertices())
            {
              throw InputError("maps of object '" + object + "' use different meshes");
            }
            mesh = mesh ? mesh : &m.data.mesh;
            group.emplace_back(*mesh, m.map.values());
          }
        }
        if (group.empty())
        {
          continue;
        }
        try
        {
          table.push_back({area.name, intent, analysis::active_area_fraction(*mesh, group, area, cfg)});
        }
        catch (const std::invalid_argument& e)
        {
          throw InputError(a.areas + ": " + e.what());
        }
      }
    }
    auto f = open_output(out / "active_areas.tsv");
    analysis::write_active_area_table(f, table);
  }
  std::vector<analysis::GraspRecord> grasps;
  for (const auto& m : maps)
  {
    if (m.row.has_hand)
    {
      grasps.push_back({m.row.participant, m.row.object, m.row.intent, m.row.bimanual, m.row.hand_length});
    }
  }
  if (!grasps.empty())
  {
    auto f = open_output(out / "bimanual.tsv");
    analysis::write_bimanual_table(f, analysis::bimanual_stats(grasps));
  }
}

// --- export ---------------------------------------------------------------

struct ExportArgs
{
  std::string cohort;
  std::string out;
  std::string repr = "both";
  int resolution = 64;
  int points = 3000;
  int augment = 0;
  std::vector<std::string> held_out{"mug", "pan", "wine glass"};
  double threshold = 0.4;
};

void add_export(CLI::App& sub, ExportArgs& a)
{
  sub.add_option("--cohort", a.cohort, "cohort table: map, object, intent, sample id");
  sub.add_option("--out", a.out, "dataset directory");
  sub.add_option("--repr", a.repr, "representation")->check(CLI::IsMember({"voxel", "point", "both"}));
  sub.add_option("--resolution", a.resolution, "voxel grid resolution")->check(CLI::Range(2, 512));
  sub.add_option("--points", a.points, "points per sample")->check(CLI::PositiveNumber);
  sub.add_option("--augment", a.augment, "augmented copies per training sample")
      ->check(CLI::NonNegativeNumber);
  sub.add_option("--held-out", a.held_out, "test-split objects");
  sub.add_option("--threshold", a.threshold, "contact threshold for labels");
}

TriMesh augmented_mesh(const TriMesh& mesh, const repr::AugmentSpec& spec)
{
  const Mat3 r = repr::yaw_matrix(spec.yaw);
  std::vector<Vec3> v;
  v.reserve(mesh.num_vertices());
  for (const Vec3& p : mesh.vertices())
  {
    Vec3 q = r * p;
    q[spec.axis] *= spec.factor;
    v.push_back(q);
  }
  return TriMesh(std::move(v), mesh.faces());
}

void cmd_export(const ExportArgs& a, const Globals& g, Run& run)
{
  if (a.cohort.empty())
  {
    throw UsageError("--cohort is required");
  }
  const auto rows = read_cohort(a.cohort);
  run.inputs.push_back(a.cohort);
  const std::set<std::string> held(a.held_out.begin(), a.held_out.end());
  const bool want_voxel = a.repr != "point";
  const bool want_point = a.repr != "voxel";
  analysis::AnalysisConfig cfg;
  cfg.contact_threshold = a.threshold;
  cfg.validate();

  make_output_dir(a.out);
  const fs::path root(a.out);
  for (const repr::Split s : {repr::Split::train, repr::Split::test})
  {
    fs::create_directories(root / repr::split_name(s));
  }
  std::set<std::string> seen;
  std::vector<repr::ManifestEntry> entries;
  for (const auto& r : rows)
  {
    const std::string intent = analysis::intent_name(r.intent);
    if (!seen.insert(r.object + '\t' + intent + '\t' + r.participant).second)
    {
      throw InputError(a.cohort + ": duplicate sample " + r.object + "/" + intent + "/" + r.participant);
    }
    const MeshWithContact m = load_map(r.path);
    run.inputs.push_back(r.path);
    const repr::Labels labels = repr::contact_labels(m.mesh, *m.contact, cfg);
    // Points are shared by all maps of one object.
    const std::uint64_t point_seed = util::derive_seed(g.seed, util::fnv1a(r.object));
    auto emit = [&](const std::string& id, repr::SampleRecord rec) {
      entries.push_back(repr::export_item(root, {r.object, intent, id, std::move(rec)}, held));
    };
    std::optional<repr::PointSample> points;
    if (want_point)
    {
      points = repr::make_point_sample(m.mesh, labels, static_cast<std::size_t>(a.points), point_seed);
      emit(r.participant, repr::to_record(*points));
    }
    if (want_voxel)
    {
      emit(r.participant, repr::to_record(repr::make_voxel_sample(m.mesh, labels, a.resolution, 0.0, g.workers())));
    }
    if (repr::split_for(r.object, held) == repr::Split::test)
    {
      continue;
    }
    const std::uint64_t aug_seed = util::derive_seed(g.seed, util::fnv1a(r.object + '\t' + intent + '\t' + r.participant));
    for (int i = 1; i <= a.augment; ++i)
    {
      const auto spec = repr::AugmentSpec::random(util::derive_seed(aug_seed, static_cast<std::uint64_t>(i)));
      const std::string id = r.participant + "_aug" + std::to_string(i);
      if (points)
      {
        emit(id, repr::to_record(repr::augment(*points, spec)));
      }
      if (want_voxel)
      {
        emit(id, repr::to_record(repr::make_voxel_sample(augmented_mesh(m.mesh, spec), labels, a.resolution,
                                                         0.0, g.workers())));
      }
    }
  }
  repr::write_manifest(root / "manifest.txt", entries);
}

// --- eval -----------------------------------------------------------------
//
// Predictions: <dir>/<intent>/<strategy>_k<k>/<model>/<object>.bin, object
// names made file-safe. VoxNet columns are scored against voxel samples,
// PointNet columns against point samples.

struct EvalArgs
{
  std::string dataset;
  std::string predictions;
  std::string out;
};

void add_eval(CLI::App& sub, EvalArgs& a)
{
  sub.add_option("--dataset", a.dataset, "dataset directory written by export");
  sub.add_option("--predictions", a.predictions, "prediction directory");
  sub.add_option("--out", a.out, "report directory");
}

repr::SampleKind model_kind(const std::string& model)
{
  return model == "voxnet" ? repr::SampleKind::voxel : repr::SampleKind::point;
}

void cmd_eval(const EvalArgs& a, const Globals& g, Run& run)
{
  require_dir(a.dataset, "dataset directory");
  require_dir(a.predictions, "prediction directory");
  const fs::path root(a.dataset);
  const auto entries = repr::read_manifest(root / "manifest.txt");
  run.inputs.push_back(a.dataset);
  run.inputs.push_back(a.predictions);

  std::map<repr::SampleKind, diverse::GroundTruth> gt;
  std::set<std::string> test_objects;
  for (const auto& e : entries)
  {
    if (e.split != repr::Split::test)
    {
      continue;
    }
    repr::SampleRecord rec = repr::read_sample(root / e.file);
    gt[rec.kind][e.intent][e.object].push_back(std::move(rec.labels));
    test_objects.insert(e.object);
  }
  if (test_objects.empty())
  {
    throw InputError(a.dataset + ": no test samples in the manifest");
  }
  std::vector<std::string> objects;
  for (const auto& o : diverse::default_table_objects())
  {
    if (test_objects.erase(o))
    {
      objects.push_back(o);
    }
  }
  objects.insert(objects.end(), test_objects.begin(), test_objects.end());

  std::vector<diverse::ColumnInput> columns;
  for (const auto& spec : diverse::default_table_columns())
  {
    const fs::path dir = fs::path(a.predictions) / spec.key();
    if (!fs::is_directory(dir))
    {
      continue;
    }
    diverse::ColumnInput col{spec, {}};
    for (const auto& obj : objects)
    {
      const fs::path file = dir / (repr::file_safe(obj) + ".bin");
      if (!fs::is_regular_file(file))
      {
        throw InputError("missing predictions: " + file.generic_string());
      }
      auto p = repr::read_predictions(file);
      if (p.kind != model_kind(spec.model))
      {
        throw InputError(file.generic_string() + ": " + repr::kind_name(p.kind) + " predictions for " +
                         spec.model_label());
      }
      if (p.k() != static_cast<std::size_t>(spec.k))
      {
        throw InputError(file.generic_string() + ": " + std::to_string(p.k()) + " maps for k = " +
                         std::to_string(spec.k));
      }
      col.predictions.emplace(obj, std::move(p));
    }
    columns.push_back(std::move(col));
  }
  if (columns.empty())
  {
    throw InputError(a.predictions + ": no prediction columns (expected <intent>/<strategy>_k<k>/<model>/)");
  }

  diverse::ErrorTable table;
  table.objects = objects;
  table.cells.assign(objects.size() + 1, {});
  for (const auto kind : {repr::SampleKind::voxel, repr::SampleKind::point})
  {
    std::vector<diverse::ColumnInput> group;
    std::vector<std::size_t> where;
    for (std::size_t c = 0; c < columns.size(); ++c)
    {
      if (model_kind(columns[c].spec.model) == kind)
      {
        group.push_back(columns[c]);
        where.push_back(c);
      }
    }
    if (group.empty())
    {
      continue;
    }
    if (!gt.count(kind))
    {
      throw InputError(a.dataset + ": no " + std::string(repr::kind_name(kind)) + " test samples");
    }
    const auto part = diverse::evaluate_table(objects, gt.at(kind), group, g.workers());
    for (std::size_t r = 0; r <= objects.size(); ++r)
    {
      table.cells[r].resize(columns.size());
      for (std::size_t i = 0; i < where.size(); ++i)
      {
        table.cells[r][where[i]] = part.cells[r][i];
      }
    }
  }
  for (const auto& c : columns)
  {
    table.columns.push_back(c.spec);
  }
  make_output_dir(a.out);
  auto f = open_output(fs::path(a.out) / "error_table.tsv");
  diverse::write_error_table(f, table);
}

// --- defaults -------------------------------------------------------------

std::string config_value(const CLI::Option* o)
{
  std::string v = o->get_default_str();
  if (v.empty() && o->get_expected_max() == 0)
  {
    v = "false";
  }
  if (v.find_first_of(" \t#;=") != std::string::npos && v.front() != '[')
  {
    v = '"' + v + '"';
  }
  return v;
}

void print_options(std::ostream& out, const CLI::App& app)
{
  for (const CLI::Option* o : app.get_options())
  {
    const std::string name = o->get_single_name();
    if (name == "help" || name == "version" || name == "config" || o->get_lnames().empty())
    {
      continue;
    }
    out << "# " << o->get_description() << '\n';
    const std::string v = config_value(o);
    if (v.empty())
    {
      out << "# " << name << " =\n";
    }
    else
    {
      out << name << " = " << v << '\n';
    }
  }
}

void print_defaults(std::ostream& out, const CLI::App& app)
{
  out << "# contactscan " << CONTACTSCAN_VERSION << " defaults\n";
  print_options(out, app);
  for (const CLI::App* sub : app.get_subcommands({}))
  {
    if (sub->get_name() == "defaults")
    {
      continue;
    }
    out << "\n[" << sub->get_name() << "]\n";
    print_options(out, *sub);
  }
}

int exit_code(PipelineStage stage)
{
  switch (stage)
  {
    case PipelineStage::segmentation:
      return 3;
    case PipelineStage::pose_estimation:
      return 4;
    case PipelineStage::fusion:
      return 5;
  }
  return 1;
}
}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Thermal contact-map capture and analysis toolkit."};
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.set_version_flag("--version", CONTACTSCAN_VERSION);
  Globals g;
  app.set_config("--config", "", "INI configuration; [section] per subcommand, command-line flags override");
  app.add_option("--seed", g.seed, "random seed for noise, restarts and sampling");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores");

  SynthArgs synth_args;
  ReconstructArgs recon_args;
  AnalyzeArgs analyze_args;
  ExportArgs export_args;
  EvalArgs eval_args;
  auto* synth = app.add_subcommand("synth", "simulate a turntable scan of a mesh with a contact map");
  auto* recon = app.add_subcommand("reconstruct", "estimate poses and fuse a contact map from a scan");
  auto* analyze = app.add_subcommand("analyze", "cluster contact maps and report contact statistics");
  auto* exporter = app.add_subcommand("export", "write voxel and point datasets with train/test splits");
  auto* eval = app.add_subcommand("eval", "score predictions against the test split");
  auto* defaults = app.add_subcommand("defaults", "print every default as a configuration file");
  add_synth(*synth, synth_args);
  add_reconstruct(*recon, recon_args);
  add_analyze(*analyze, analyze_args);
  add_export(*exporter, export_args);
  add_eval(*eval, eval_args);
  app.require_subcommand(1);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0)
  {
    g.config = cfg->as<std::string>();
  }

  try
  {
    Run run;
    const CLI::App* sub = nullptr;
    std::string out;
    if (defaults->parsed())
    {
      print_defaults(std::cout, app);
      return 0;
    }
    if (synth->parsed())
    {
      cmd_synth(synth_args, g, run);
      sub = synth;
      out = synth_args.out;
    }
    else if (recon->parsed())
    {
      cmd_reconstruct(recon_args, g, run);
      sub = recon;
      out = recon_args.out;
    }
    else if (analyze->parsed())
    {
      cmd_analyze(analyze_args, g, run);
      sub = analyze;
      out = analyze_args.out;
    }
    else if (exporter->parsed())
    {
      cmd_export(export_args, g, run);
      sub = exporter;
      out = export_args.out;
    }
    else if (eval->parsed())
    {
      cmd_eval(eval_args, g, run);
      sub = eval;
      out = eval_args.out;
    }
    write_run_manifest(out, g, *sub, run);
    return 0;
  }
  catch (const UsageError& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  catch (const InputError& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  catch (const PipelineError& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.stage());
  }
  catch (const std::invalid_argument& e)
  {
    std::cerr << "error: invalid input: " << e.what() << '\n';
    return 2;
  }
  catch (const std::exception& e)
  {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
