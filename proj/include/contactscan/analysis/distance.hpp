#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "contactscan/analysis/config.hpp"
#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/util/kdtree.hpp"
#include "contactscan/util/parallel.hpp"

namespace contactscan::analysis
{
struct ContactPointSet
{
  PointList points;
  std::vector<std::uint32_t> vertices;  // source vertex of each point
};

/// Vertices with value strictly above the contact threshold.
inline ContactPointSet contact_points(const TriMesh& mesh, const ContactMap& map,
                                      const AnalysisConfig& cfg = {})
{
  map.require_mesh(mesh);
  ContactPointSet out;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
  {
    if (map[i] > cfg.contact_threshold)
    {
      out.points.push_back(mesh.vertices()[i]);
      out.vertices.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return out;
}

/// Sum over a of the distance to the nearest point of b, accumulated in
/// index order of a.
inline double directed_distance_sum(const PointList& a, const util::KdTree& b)
{
  double sum = 0.0;
  for (const Vec3& p : a)
  {
    sum += std::sqrt(b.nearest(p).squared_distance);
  }
  return sum;
}

/// d(p1, p2) = (dbar(p1, p2) + dbar(p2, p1)) / (|p1| + |p2|).
inline double set_distance(const PointList& p1, const PointList& p2)
{
  if (p1.empty() || p2.empty())
  {
    throw std::invalid_argument("set distance of an empty point set");
  }
  const util::KdTree t1(p1);
  const util::KdTree t2(p2);
  return (directed_distance_sum(p1, t2) + directed_distance_sum(p2, t1)) /
         static_cast<double>(p1.size() + p2.size());
}

inline double set_distance(const ContactPointSet& p1, const ContactPointSet& p2)
{
  return set_distance(p1.points, p2.points);
}

struct SymmetricDistance
{
  double distance = 0.0;
  double angle = 0.0;  // rotation applied to p2, radians in [0, 2 pi)
};

/// Minimum of set_distance(p1, R(theta) p2) over theta = 2 pi i / n about
/// the symmetry axis through the origin; the first minimizing angle wins.
inline SymmetricDistance symmetric_set_distance(const PointList& p1, const PointList& p2,
                                                const SymmetrySpec& sym, int n_angles)
{
  sym.validate();
  if (sym.kind != SymmetryKind::axial)
  {
    throw std::invalid_argument("symmetric set distance needs an axial symmetry");
  }
  if (n_angles < 1)
  {
    throw std::invalid_argument("n_angles must be positive");
  }
  if (p1.empty() || p2.empty())
  {
    throw std::invalid_argument("set distance of an empty point set");
  }
  const util::KdTree t1(p1);
  const double d12_norm = static_cast<double>(p1.size() + p2.size());
  SymmetricDistance best{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < n_angles; ++i)
  {
    const double angle = 2.0 * std::numbers::pi * i / n_angles;
    const PointList rotated =
        i == 0 ? p2 : transform_points(p2, RigidPose::from_axis_angle(sym.axis, angle));
    const util::KdTree t2(rotated);
    const double d = (directed_distance_sum(p1, t2) + directed_distance_sum(rotated, t1)) / d12_norm;
    if (d < best.distance)
    {
      best = {d, angle};
    }
  }
  return best;
}

/// Dense symmetric matrix, row-major.
class DistanceMatrix
{
public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v)
  {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// Pairwise distances d(i, j) for i < j, computed in parallel over pairs.
template <typename Fn>
DistanceMatrix pairwise_distances(std::size_t n, Fn&& distance, unsigned threads = 1)
{
  DistanceMatrix out(n);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = i + 1; j < n; ++j)
    {
      pairs.emplace_back(i, j);
    }
  }
  std::vector<double> values(pairs.size());
  util::parallel_for(0, pairs.size(), threads,
                     [&](std::size_t p) { values[p] = distance(pairs[p].first, pairs[p].second); });
  for (std::size_t p = 0; p < pairs.size(); ++p)
  {
    out.set(pairs[p].first, pairs[p].second, values[p]);
  }
  return out;
}

/// Plain or symmetry-aligned set distances between all contact sets.
inline DistanceMatrix contact_distances(const std::vector<ContactPointSet>& sets,
                                        const SymmetrySpec& sym, int n_angles,
                                        unsigned threads = 1)
{
  for (const auto& s : sets)
  {
    if (s.points.empty())
    {
      throw std::invalid_argument("contact set without points above threshold");
    }
  }
  return pairwise_distances(
      sets.size(),
      [&](std::size_t i, std::size_t j) {
        return sym.kind == SymmetryKind::axial
                   ? symmetric_set_distance(sets[i].points, sets[j].points, sym, n_angles).distance
                   : set_distance(sets[i].points, sets[j].points);
      },
      threads);
}
}  // namespace contactscan::analysis
