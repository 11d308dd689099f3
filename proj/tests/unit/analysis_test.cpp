#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "contactscan/analysis/areas.hpp"
#include "contactscan/analysis/distance.hpp"
#include "contactscan/analysis/kmedoids.hpp"
#include "contactscan/analysis/normalize.hpp"
#include "contactscan/analysis/report.hpp"
#include "contactscan/core/primitives.hpp"

using namespace contactscan;
using namespace contactscan::analysis;

namespace
{
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

// The definition, evaluated literally.
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

ContactMap random_map(const TriMesh& mesh, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(mesh.num_vertices());
  for (double& x : v)
  {
    x = u(rng);
  }
  return ContactMap(mesh, std::move(v));
}
}  // namespace

TEST(Sigmoid, EndpointsMidpointAndOrder)
{
  const TriMesh plate = primitives::make_plane_grid(1.0, 1.0, 10, 10);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.2, 0.7);
  std::vector<double> v(plate.num_vertices());
  for (double& x : v)
  {
    x = u(rng);
  }
  v[3] = 0.2;
  v[7] = 0.7;
  v[11] = 0.45;
  const ContactMap out = normalize_sigmoid(plate, ContactMap(plate, v));
  EXPECT_EQ(out[3], 0.05);
  EXPECT_EQ(out[7], 0.95);
  EXPECT_NEAR(out[11], 0.5, 1e-12);
  // Oracle: logistic with a, b solved from the two endpoint equations.
  const double a = (std::log(0.95 / 0.05) - std::log(0.05 / 0.95)) / 0.5;
  const double b = std::log(0.05 / 0.95) - a * 0.2;
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    EXPECT_NEAR(out[i], 1.0 / (1.0 + std::exp(-(a * v[i] + b))), 1e-12);
    EXPECT_GT(out[i], 0.0);
    EXPECT_LT(out[i], 1.0);
    for (std::size_t j = 0; j < v.size(); ++j)
    {
      if (v[i] < v[j])
      {
        ASSERT_LT(out[i], out[j]);
      }
    }
  }
}

TEST(Sigmoid, ConstantMapAndBadConfigRejected)
{
  const TriMesh plate = primitives::make_plane_grid(1.0, 1.0, 2, 2);
  EXPECT_THROW(normalize_sigmoid(plate, ContactMap::constant(plate, 0.3)), std::invalid_argument);
  AnalysisConfig bad;
  bad.sigmoid_low = 0.9;
  bad.sigmoid_high = 0.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  AnalysisConfig bad_k;
  bad_k.k = 0;
  EXPECT_THROW(bad_k.validate(), std::invalid_argument);
}

TEST(ContactPoints, StrictThreshold)
{
  const TriMesh mesh = primitives::make_icosphere(0.05, 2);
  EXPECT_TRUE(contact_points(mesh, ContactMap::constant(mesh, 0.39)).points.empty());
  EXPECT_TRUE(contact_points(mesh, ContactMap::constant(mesh, 0.4)).points.empty());
  EXPECT_EQ(contact_points(mesh, ContactMap::constant(mesh, 1.0)).points.size(), mesh.num_vertices());
  std::mt19937_64 rng(2);
  const ContactMap m = random_map(mesh, rng);
  const ContactPointSet s = contact_points(mesh, m);
  std::size_t k = 0;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
  {
    if (m[i] > 0.4)
    {
      ASSERT_LT(k, s.points.size());
      EXPECT_EQ(s.vertices[k], i);
      EXPECT_EQ(s.points[k], mesh.vertices()[i]);
      ++k;
    }
  }
  EXPECT_EQ(k, s.points.size());
}

TEST(SetDistance, SimpleCases)
{
  const PointList a{Vec3(0.1, 0.2, 0.3), Vec3(-0.4, 0.0, 0.2)};
  EXPECT_EQ(set_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(set_distance(PointList{Vec3::Zero()}, PointList{Vec3(0.0, 0.3, 0.4)}), 0.5);
  EXPECT_THROW(set_distance(a, PointList{}), std::invalid_argument);
  EXPECT_THROW(set_distance(PointList{}, a), std::invalid_argument);
}

TEST(SetDistance, MatchesBruteForceBitExactly)
{
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(1, 120);
  for (int pair = 0; pair < 200; ++pair)
  {
    const PointList a = random_points(rng, size(rng));
    const PointList b = random_points(rng, size(rng));
    ASSERT_EQ(set_distance(a, b), brute_set_distance(a, b)) << pair;
  }
}

TEST(SetDistance, MetricProperties)
{
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial)
  {
    const PointList a = random_points(rng, 40);
    const PointList b = random_points(rng, 25);
    const double d = set_distance(a, b);
    EXPECT_GT(d, 0.0);
    EXPECT_EQ(d, set_distance(b, a));
    EXPECT_EQ(set_distance(a, a), 0.0);
    // Power-of-two scaling is exact in floating point.
    PointList a2 = a;
    PointList b2 = b;
    for (Vec3& p : a2)
    {
      p *= 4.0;
    }
    for (Vec3& p : b2)
    {
      p *= 4.0;
    }
    EXPECT_EQ(set_distance(a2, b2), 4.0 * d);
    PointList a3 = a;
    PointList b3 = b;
    for (Vec3& p : a3)
    {
      p *= 3.7;
    }
    for (Vec3& p : b3)
    {
      p *= 3.7;
    }
    EXPECT_NEAR(set_distance(a3, b3), 3.7 * d, 1e-12 * d);
  }
}

TEST(SymmetricDistance, RecoversRotationAndDegeneratesToPlain)
{
  std::mt19937_64 rng(5);
  const PointList a = random_points(rng, 30);
  const auto sym = SymmetrySpec::axial_about(Vec3::UnitZ());
  const PointList b =
      transform_points(a, RigidPose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2.0));
  const SymmetricDistance r = symmetric_set_distance(a, b, sym, 4);
  EXPECT_NEAR(r.distance, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.angle, 1.5 * std::numbers::pi);
  const SymmetricDistance one = symmetric_set_distance(a, b, sym, 1);
  EXPECT_EQ(one.distance, set_distance(a, b));
  EXPECT_EQ(one.angle, 0.0);
  EXPECT_THROW(symmetric_set_distance(a, b, SymmetrySpec{}, 4), std::invalid_argument);
}

TEST(SymmetricDistance, MatchesExplicitAngleLoop)
{
  std::mt19937_64 rng(6);
  const Vec3 axis = Vec3(0.3, -0.2, 1.0).normalized();
  const auto sym = SymmetrySpec::axial_about(axis);
  for (int trial = 0; trial < 10; ++trial)
  {
    const PointList a = random_points(rng, 20);
    const PointList b = random_points(rng, 35);
    double best = std::numeric_limits<double>::infinity();
    double best_angle = 0.0;
    for (int i = 0; i < 12; ++i)
    {
      const double angle = 2.0 * std::numbers::pi * i / 12;
      const double d =
          brute_set_distance(a, transform_points(b, RigidPose::from_axis_angle(axis, angle)));
      if (d < best)
      {
        best = d;
        best_angle = angle;
      }
    }
    const SymmetricDistance r = symmetric_set_distance(a, b, sym, 12);
    EXPECT_EQ(r.distance, best);
    EXPECT_EQ(r.angle, best_angle);
    EXPECT_NEAR(symmetric_set_distance(b, a, sym, 12).distance, r.distance, 1e-15);
  }
}

namespace
{
DistanceMatrix random_matrix(std::mt19937_64& rng, std::size_t n)
{
  const PointList pts = random_points(rng, n);
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = i + 1; j < n; ++j)
    {
      d.set(i, j, (pts[i] - pts[j]).norm());
    }
  }
  return d;
}

double medoid_cost(const DistanceMatrix& d, const std::vector<std::size_t>& medoids)
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
}  // namespace

TEST(KMedoids, MatchesExhaustiveSearchOnSmallInstances)
{
  std::mt19937_64 rng(7);
  int flagged = 0;
  for (int inst = 0; inst < 300; ++inst)
  {
    const std::size_t n = 3 + inst % 6;
    const DistanceMatrix d = random_matrix(rng, n);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
    {
      for (std::size_t b = a + 1; b < n; ++b)
      {
        for (std::size_t c = b + 1; c < n; ++c)
        {
          best = std::min(best, medoid_cost(d, {a, b, c}));
        }
      }
    }
    const KMedoidsResult r = kmedoids(d, 3, 11);
    EXPECT_NEAR(r.cost, medoid_cost(d, r.medoids), 1e-12);
    flagged += std::abs(r.cost - best) > 1e-12;
    for (std::size_t k = 1; k < r.cost_history.size(); ++k)
    {
      ASSERT_LE(r.cost_history[k], r.cost_history[k - 1]);
    }
    EXPECT_EQ(r.cost_history.back(), r.cost);
  }
  EXPECT_EQ(flagged, 0);
}

TEST(KMedoids, SingletonClustersAndSeparatedGroups)
{
  std::mt19937_64 rng(8);
  const DistanceMatrix d = random_matrix(rng, 5);
  const KMedoidsResult all = kmedoids(d, 5);
  EXPECT_EQ(all.cost, 0.0);
  EXPECT_EQ(all.medoids, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_THROW(kmedoids(d, 6), std::invalid_argument);
  EXPECT_THROW(kmedoids(d, 0), std::invalid_argument);

  // Two groups of point sets, inter-group distance 10x the intra-group one.
  std::vector<PointList> sets;
  for (int g = 0; g < 2; ++g)
  {
    for (int m = 0; m < 6; ++m)
    {
      PointList s = random_points(rng, 15, 0.01);
      for (Vec3& p : s)
      {
        p.x() += g * 0.2;
      }
      sets.push_back(s);
    }
  }
  std::shuffle(sets.begin(), sets.end(), rng);
  const DistanceMatrix sd =
      pairwise_distances(sets.size(), [&](std::size_t i, std::size_t j) {
        return set_distance(sets[i], sets[j]);
      });
  const KMedoidsResult r = kmedoids(sd, 2);
  for (std::size_t i = 0; i < sets.size(); ++i)
  {
    const bool right = centroid(sets[i]).x() > 0.1;
    const bool medoid_right = centroid(sets[r.medoids[r.assignments[i]]]).x() > 0.1;
    EXPECT_EQ(right, medoid_right);
  }
  EXPECT_NE(centroid(sets[r.medoids[0]]).x() > 0.1, centroid(sets[r.medoids[1]]).x() > 0.1);
}

TEST(KMedoids, DeterministicAndStableAtConvergence)
{
  std::mt19937_64 rng(9);
  const DistanceMatrix d = random_matrix(rng, 40);
  const KMedoidsResult a = kmedoids(d, 4, 123);
  const KMedoidsResult b = kmedoids(d, 4, 123);
  EXPECT_EQ(a.medoids, b.medoids);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.cost_history, b.cost_history);
  // Restarting from the converged medoids changes nothing.
  const KMedoidsResult again = kmedoids_detail::run(d, a.medoids);
  EXPECT_EQ(again.medoids, a.medoids);
  EXPECT_EQ(again.assignments, a.assignments);
  EXPECT_EQ(again.cost_history.size(), 1u);
}

TEST(KMedoids, ParallelDistanceMatrixIndependentOfThreads)
{
  std::mt19937_64 rng(10);
  std::vector<ContactPointSet> sets(9);
  for (auto& s : sets)
  {
    s.points = random_points(rng, 30);
  }
  const auto sym = SymmetrySpec::axial_about(Vec3::UnitZ());
  const DistanceMatrix d1 = contact_distances(sets, sym, 8, 1);
  const DistanceMatrix d3 = contact_distances(sets, sym, 8, 3);
  for (std::size_t i = 0; i < 9; ++i)
  {
    for (std::size_t j = 0; j < 9; ++j)
    {
      ASSERT_EQ(d1(i, j), d3(i, j));
    }
  }
  sets[2].points.clear();
  EXPECT_THROW(contact_distances(sets, SymmetrySpec{}, 1), std::invalid_argument);
}

TEST(DominantMap, LargestClusterAndTieRule)
{
  std::mt19937_64 rng(11);
  std::vector<PointList> sets;
  const PointList base = random_points(rng, 20, 0.02);
  std::normal_distribution<double> jitter(0.0, 0.0005);
  for (int i = 0; i < 5; ++i)
  {
    PointList s = base;
    for (Vec3& p : s)
    {
      p += Vec3(jitter(rng), jitter(rng), jitter(rng));
    }
    sets.push_back(s);
  }
  sets.insert(sets.begin() + 2, random_points(rng, 20, 0.02));
  for (Vec3& p : sets[2])
  {
    p.x() += 0.5;
  }
  const DistanceMatrix d = pairwise_distances(
      sets.size(), [&](std::size_t i, std::size_t j) { return set_distance(sets[i], sets[j]); });
  const std::size_t dom = dominant_map(d, 2);
  EXPECT_NE(dom, 2u);
  // k = 1: the global medoid minimizes the total distance.
  std::size_t global = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    double s = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j)
    {
      s += d(i, j);
    }
    if (s < best)
    {
      best = s;
      global = i;
    }
  }
  EXPECT_EQ(dominant_map(d, 1), global);

  // Two clusters of two: the tighter pair wins.
  DistanceMatrix tie(4);
  tie.set(0, 1, 1.0);
  tie.set(2, 3, 0.5);
  tie.set(0, 2, 10.0);
  tie.set(0, 3, 10.0);
  tie.set(1, 2, 10.0);
  tie.set(1, 3, 10.0);
  EXPECT_EQ(dominant_map(tie, 2), 2u);
}

TEST(ContactArea, ClosedFormsAndOracle)
{
  const TriMesh cube = primitives::make_cube(1.0, 3);
  EXPECT_NEAR(contact_area(cube, ContactMap::constant(cube, 1.0)), 6.0, 1e-12);
  EXPECT_EQ(contact_area(cube, ContactMap::constant(cube, 0.4)), 0.0);
  const TriMesh sphere = primitives::make_icosphere(0.05, 4);
  EXPECT_NEAR(contact_area(sphere, ContactMap::constant(sphere, 1.0)),
              4.0 * std::numbers::pi * 0.05 * 0.05, 0.02 * 4.0 * std::numbers::pi * 0.05 * 0.05);
  const TriMesh cyl = primitives::make_cylinder(0.03, 0.1, 96, 10, 4);
  const double cyl_area = 2.0 * std::numbers::pi * 0.03 * 0.1 + 2.0 * std::numbers::pi * 0.03 * 0.03;
  EXPECT_NEAR(contact_area(cyl, ContactMap::constant(cyl, 1.0)), cyl_area, 0.02 * cyl_area);
  const TriMesh torus = primitives::make_torus(0.04, 0.01, 96, 48);
  const double torus_area = 4.0 * std::numbers::pi * std::numbers::pi * 0.04 * 0.01;
  EXPECT_NEAR(contact_area(torus, ContactMap::constant(torus, 1.0)), torus_area, 0.02 * torus_area);

  // One hot vertex: its face star.
  std::vector<double> one(sphere.num_vertices(), 0.0);
  one[17] = 0.9;
  double star = 0.0;
  for (std::size_t f = 0; f < sphere.faces().size(); ++f)
  {
    const Face& t = sphere.faces()[f];
    if (t[0] == 17 || t[1] == 17 || t[2] == 17)
    {
      star += sphere.face_area(f);
    }
  }
  EXPECT_EQ(contact_area(sphere, ContactMap(sphere, one)), star);

  std::mt19937_64 rng(12);
  const ContactMap m = random_map(sphere, rng);
  double oracle = 0.0;
  for (std::size_t f = 0; f < sphere.faces().size(); ++f)
  {
    const Face& t = sphere.faces()[f];
    if (std::max({m[t[0]], m[t[1]], m[t[2]]}) > 0.4)
    {
      oracle += sphere.face_area(f);
    }
  }
  EXPECT_EQ(contact_area(sphere, m), oracle);
}

TEST(ActiveArea, CohortFractionsAndFormatting)
{
  const TriMesh mesh = primitives::make_icosphere(0.05, 2);
  const ActiveArea handle{"handle", {3, 4, 5}};
  std::vector<ContactMap> hot(4, ContactMap::constant(mesh, 1.0));
  EXPECT_EQ(active_area_fraction(mesh, hot, handle), 1.0);
  EXPECT_EQ(format_percent(active_area_fraction(mesh, hot, handle)), "100.00");
  std::vector<ContactMap> cold(4, ContactMap::constant(mesh, 0.2));
  EXPECT_EQ(active_area_fraction(mesh, cold, handle), 0.0);

  std::vector<ContactMap> cohort;
  for (int i = 0; i < 50; ++i)
  {
    std::vector<double> v(mesh.num_vertices(), 0.1);
    if ((14 * i) % 50 < 14)
    {
      v[4 + (i % 2)] = 0.8;  // touches the handle
    }
    else
    {
      v[40] = 0.9;  // elsewhere
    }
    cohort.emplace_back(mesh, v);
  }
  std::size_t touching = 0;
  for (const auto& m : cohort)
  {
    touching += m[4] > 0.4 || m[5] > 0.4;
  }
  ASSERT_EQ(touching, 14u);
  const double f = active_area_fraction(mesh, cohort, handle);
  EXPECT_DOUBLE_EQ(f, 0.28);
  EXPECT_EQ(format_percent(f), "28.00");
  // Relaxing the threshold never lowers the fraction.
  double previous = 0.0;
  for (double t : {0.95, 0.7, 0.5, 0.3, 0.09})
  {
    AnalysisConfig cfg;
    cfg.contact_threshold = t;
    const double frac = active_area_fraction(mesh, cohort, handle, cfg);
    EXPECT_GE(frac, previous);
    EXPECT_LE(frac, 1.0);
    previous = frac;
  }
  EXPECT_EQ(previous, 1.0);

  std::ostringstream table;
  write_active_area_table(table, {{"Flashlight (button)", Intent::handoff, f}});
  EXPECT_EQ(table.str(), "area\tintent\tpercent\nFlashlight (button)\thandoff\t28.00\n");

  EXPECT_THROW(active_area_fraction(mesh, cohort, ActiveArea{"none", {}}), std::invalid_argument);
  EXPECT_THROW(active_area_fraction(mesh, cohort, ActiveArea{"far", {100000}}),
               std::invalid_argument);
  const TriMesh other = primitives::make_icosphere(0.05, 1);
  EXPECT_THROW(active_area_fraction(other, cohort, ActiveArea{"a", {1}}), std::invalid_argument);
}

TEST(FingertipBound, SumsMeansAndDoubling)
{
  EXPECT_DOUBLE_EQ(fingertip_bound({{0.0005, 0.0015}}, false), 0.002);
  EXPECT_DOUBLE_EQ(fingertip_bound({{0.0005, 0.0015}}, true), 0.004);
  const std::vector<std::vector<double>> four{
      {0.0004, 0.0003}, {0.0005}, {0.0002, 0.0002, 0.0002}, {0.001}};
  EXPECT_DOUBLE_EQ(fingertip_bound(four, false), (0.0007 + 0.0005 + 0.0006 + 0.001) / 4.0);
  EXPECT_THROW(fingertip_bound({}, false), std::invalid_argument);
  EXPECT_THROW(fingertip_bound({{-0.1}}, false), std::invalid_argument);
}

TEST(BimanualStats, GroupsMeansAndDeviation)
{
  std::vector<GraspRecord> records{
      {"p1", "pan", Intent::use, true, 0.18},
      {"p2", "pan", Intent::use, true, 0.20},
      {"p3", "pan", Intent::use, false, 0.21},
  };
  const auto stats = bimanual_stats(records);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_FALSE(stats[0].bimanual);
  EXPECT_TRUE(stats[0].single);
  EXPECT_EQ(stats[0].mean, 0.21);
  EXPECT_EQ(stats[0].stddev, 0.0);
  EXPECT_TRUE(stats[1].bimanual);
  EXPECT_NEAR(stats[1].mean, 0.19, 1e-15);
  EXPECT_NEAR(stats[1].stddev, 0.0141421356, 1e-9);
  std::ostringstream out;
  write_bimanual_table(out, stats);
  EXPECT_NE(out.str().find("pan\tuse\t0\t1\t0.21000\t-\n"), std::string::npos);

  // Smaller hands grasp bimanually in this synthetic cohort.
  std::mt19937_64 rng(13);
  std::normal_distribution<double> hand(0.19, 0.01);
  std::vector<GraspRecord> cohort;
  for (int i = 0; i < 40; ++i)
  {
    const double h = hand(rng);
    cohort.push_back({"p" + std::to_string(i), "box", Intent::handoff, h < 0.19, h});
  }
  const auto groups = bimanual_stats(cohort);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_LT(groups[1].mean, groups[0].mean);
  EXPECT_THROW(bimanual_stats({{"p", "o", Intent::use, false, 0.0}}), std::invalid_argument);
  EXPECT_EQ(parse_intent("handoff"), Intent::handoff);
  EXPECT_THROW(parse_intent("grab"), std::invalid_argument);
}
