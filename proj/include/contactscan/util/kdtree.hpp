#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "contactscan/core/types.hpp"

namespace contactscan::util
{
/// Squared Euclidean distance evaluated as dx*dx + dy*dy + dz*dz.
inline double squared_distance(const Vec3& a, const Vec3& b)
{
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Static 3-d tree. Nearest queries return the lowest original index among
/// equidistant points.
class KdTree
{
public:
  struct Hit
  {
    std::uint32_t index = 0;
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points)
  {
    const std::size_t n = points.size();
    index_.resize(n);
    std::iota(index_.begin(), index_.end(), 0u);
    points_.assign(points.begin(), points.end());
    axis_.assign(n, 0);
    build(0, n);
    std::vector<Vec3> sorted(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      sorted[i] = points_[index_[i]];
    }
    points_ = std::move(sorted);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  Hit nearest(const Vec3& q) const
  {
    return nearest_within(q, std::numeric_limits<double>::infinity());
  }

  /// Nearest point with squared distance <= max_squared_distance; the hit has
  /// infinite distance when there is none.
  Hit nearest_within(const Vec3& q, double max_squared_distance) const
  {
    if (points_.empty())
    {
      throw std::logic_error("nearest query on empty kd-tree");
    }
    Hit best;
    double bound = max_squared_distance;
    std::array<double, 3> off{0.0, 0.0, 0.0};
    search(q, 0, points_.size(), 0.0, off, best, bound);
    return best;
  }

  /// Original indices of all points within `radius` of q, ascending.
  std::vector<std::uint32_t> within(const Vec3& q, double radius) const
  {
    std::vector<std::uint32_t> out;
    collect(q, radius * radius, 0, points_.size(), out);
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  static constexpr std::size_t kLeafSize = 8;

  void build(std::size_t begin, std::size_t end)
  {
    if (end - begin <= kLeafSize)
    {
      return;
    }
    Vec3 lo = points_[index_[begin]];
    Vec3 hi = lo;
    for (std::size_t k = begin + 1; k < end; ++k)
    {
      lo = lo.cwiseMin(points_[index_[k]]);
      hi = hi.cwiseMax(points_[index_[k]]);
    }
    const Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y() > ext[axis]) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                     index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = points_[a][axis];
                       const double cb = points_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    axis_[mid] = static_cast<std::uint8_t>(axis);
    build(begin, mid);
    build(mid + 1, end);
  }

  // Cell distance is tracked incrementally per axis; `bound` shrinks as hits
  // are found.
  void search(const Vec3& q, std::size_t begin, std::size_t end, double cell_d2,
              std::array<double, 3>& off, Hit& best, double& bound) const
  {
    if (begin >= end)
    {
      return;
    }
    if (end - begin <= kLeafSize)
    {
      for (std::size_t k = begin; k < end; ++k)
      {
        const double d = squared_distance(q, points_[k]);
        if (d <= bound &&
            (d < best.squared_distance || (d == best.squared_distance && index_[k] < best.index)))
        {
          best = {index_[k], d};
          bound = d;
        }
      }
      return;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    const Vec3& p = points_[mid];
    const double d = squared_distance(q, p);
    if (d <= bound &&
        (d < best.squared_distance || (d == best.squared_distance && index_[mid] < best.index)))
    {
      best = {index_[mid], d};
      bound = d;
    }
    const int axis = axis_[mid];
    const double diff = q[axis] - p[axis];
    const std::size_t near_begin = diff < 0.0 ? begin : mid + 1;
    const std::size_t near_end = diff < 0.0 ? mid : end;
    const std::size_t far_begin = diff < 0.0 ? mid + 1 : begin;
    const std::size_t far_end = diff < 0.0 ? end : mid;
    search(q, near_begin, near_end, cell_d2, off, best, bound);
    const double saved = off[axis];
    const double far_d2 = cell_d2 - saved * saved + diff * diff;
    if (far_d2 <= bound)
    {
      off[axis] = diff;
      search(q, far_begin, far_end, far_d2, off, best, bound);
      off[axis] = saved;
    }
  }

  void collect(const Vec3& q, double r2, std::size_t begin, std::size_t end,
               std::vector<std::uint32_t>& out) const
  {
    if (begin >= end)
    {
      return;
    }
    if (end - begin <= kLeafSize)
    {
      for (std::size_t k = begin; k < end; ++k)
      {
        if (squared_distance(q, points_[k]) <= r2)
        {
          out.push_back(index_[k]);
        }
      }
      return;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    const Vec3& p = points_[mid];
    if (squared_distance(q, p) <= r2)
    {
      out.push_back(index_[mid]);
    }
    const int axis = axis_[mid];
    const double diff = q[axis] - p[axis];
    if (diff <= 0.0 || diff * diff <= r2)
    {
      collect(q, r2, begin, mid, out);
    }
    if (diff >= 0.0 || diff * diff <= r2)
    {
      collect(q, r2, mid + 1, end, out);
    }
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> index_;
  std::vector<std::uint8_t> axis_;
};
}  // namespace contactscan::util
