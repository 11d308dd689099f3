#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "contactscan/core/types.hpp"

namespace contactscan::synth
{
struct RayHit
{
  double t = std::numeric_limits<double>::infinity();
  std::uint32_t triangle = 0;
  // Barycentric weights of the second and third corner.
  double u = 0.0;
  double v = 0.0;
};

/// Moller-Trumbore, two-sided. Edges are widened by a tiny barycentric margin
/// so rays along a shared edge cannot slip between both neighbors.
inline constexpr double kEdgeMargin = 1e-9;

/// Returns t along `dir`; u and v are clamped into the triangle.
inline std::optional<RayHit> intersect_triangle(const Vec3& origin, const Vec3& dir,
                                                const Vec3& a, const Vec3& b, const Vec3& c)
{
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (det == 0.0)
  {
    return std::nullopt;
  }
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < -kEdgeMargin || u > 1.0 + kEdgeMargin)
  {
    return std::nullopt;
  }
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < -kEdgeMargin || u + v > 1.0 + kEdgeMargin)
  {
    return std::nullopt;
  }
  RayHit hit;
  hit.t = e2.dot(q) * inv;
  hit.u = std::clamp(u, 0.0, 1.0);
  hit.v = std::clamp(v, 0.0, 1.0 - hit.u);
  return hit;
}

/// Bounding-volume hierarchy over a triangle soup. Nearest-hit queries break
/// ties in t by the lowest triangle index so results are deterministic.
class Bvh
{
public:
  Bvh() = default;

  explicit Bvh(std::vector<std::array<Vec3, 3>> triangles) : triangles_(std::move(triangles))
  {
    if (triangles_.empty())
    {
      return;
    }
    std::vector<std::uint32_t> order(triangles_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<Vec3> centroids(triangles_.size());
    for (std::size_t i = 0; i < triangles_.size(); ++i)
    {
      centroids[i] = (triangles_[i][0] + triangles_[i][1] + triangles_[i][2]) / 3.0;
    }
    nodes_.reserve(2 * triangles_.size() / kLeafSize + 1);
    nodes_.emplace_back();
    build(0, order, centroids, 0, order.size());
    order_ = std::move(order);
  }

  std::size_t size() const { return triangles_.size(); }

  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir, double t_min = 1e-9) const
  {
    if (nodes_.empty())
    {
      return std::nullopt;
    }
    const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    RayHit best;
    bool found = false;
    std::array<std::uint32_t, 64> stack{};
    int top = 0;
    stack[top++] = 0;
    while (top > 0)
    {
      const Node& node = nodes_[stack[--top]];
      if (!slab_test(node, origin, inv, best.t))
      {
        continue;
      }
      if (node.count > 0)
      {
        for (std::uint32_t k = node.first; k < node.first + node.count; ++k)
        {
          const std::uint32_t tri = order_[k];
          const auto& t = triangles_[tri];
          auto hit = intersect_triangle(origin, dir, t[0], t[1], t[2]);
          if (!hit || hit->t <= t_min)
          {
            continue;
          }
          if (!found || hit->t < best.t || (hit->t == best.t && tri < best.triangle))
          {
            best = *hit;
            best.triangle = tri;
            found = true;
          }
        }
      }
      else
      {
        stack[top++] = node.left;
        stack[top++] = node.left + 1;
      }
    }
    if (!found)
    {
      return std::nullopt;
    }
    return best;
  }

private:
  static constexpr std::uint32_t kLeafSize = 4;

  struct Node
  {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t left = 0;   // first child; second child is left + 1
    std::uint32_t first = 0;  // leaf range into order_
    std::uint32_t count = 0;  // > 0 for leaves
  };

  static bool slab_test(const Node& n, const Vec3& o, const Vec3& inv, double t_max)
  {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a)
    {
      double ta = (n.lo[a] - o[a]) * inv[a];
      double tb = (n.hi[a] - o[a]) * inv[a];
      if (ta > tb)
      {
        std::swap(ta, tb);
      }
      // NaN from 0 * inf: treat as non-limiting.
      if (ta == ta)
      {
        t0 = std::max(t0, ta);
      }
      if (tb == tb)
      {
        t1 = std::min(t1, tb);
      }
      // Inclusive with a relative margin: flat nodes give t0 == t1 up to rounding.
      if (t0 > t1 + 1e-12 * std::abs(t1))
      {
        return false;
      }
    }
    return true;
  }

  void build(std::uint32_t index, std::vector<std::uint32_t>& order,
             const std::vector<Vec3>& centroids, std::size_t begin, std::size_t end)
  {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    Vec3 clo = lo;
    Vec3 chi = hi;
    for (std::size_t k = begin; k < end; ++k)
    {
      for (const Vec3& p : triangles_[order[k]])
      {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
      clo = clo.cwiseMin(centroids[order[k]]);
      chi = chi.cwiseMax(centroids[order[k]]);
    }
    nodes_[index].lo = lo;
    nodes_[index].hi = hi;
    if (end - begin <= kLeafSize)
    {
      nodes_[index].first = static_cast<std::uint32_t>(begin);
      nodes_[index].count = static_cast<std::uint32_t>(end - begin);
      return;
    }
    int axis = 0;
    const Vec3 ext = chi - clo;
    if (ext.y() > ext[axis]) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = centroids[a][axis];
                       const double cb = centroids[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    // Children are allocated as a pair so the right child is left + 1.
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[index].left = left;
    build(left, order, centroids, begin, mid);
    build(left + 1, order, centroids, mid, end);
  }

  std::vector<std::array<Vec3, 3>> triangles_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};
}  // namespace contactscan::synth
