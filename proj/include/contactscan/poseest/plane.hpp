#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "contactscan/core/error.hpp"
#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/util/image.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::poseest
{
/// {x : normal . x = offset}
struct Plane
{
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
  Plane flipped() const { return {-normal, -offset}; }
};

/// Total least squares plane: normal is the smallest principal direction of
/// the centered points.
inline Plane fit_plane(std::span<const Vec3> points)
{
  if (points.size() < 3)
  {
    throw std::invalid_argument("plane fit needs at least 3 points");
  }
  const Vec3 c = centroid(points);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points)
  {
    const Vec3 d = p - c;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();
  if (!(ev(2) > 0.0) || ev(1) <= 1e-14 * ev(2))
  {
    throw std::invalid_argument("points are collinear or coincident");
  }
  Plane plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = plane.normal.dot(c);
  return plane;
}

struct RansacResult
{
  Plane plane;
  std::vector<std::uint32_t> inliers;
  double residual_sigma = 0.0;  // robust (MAD) spread of inlier residuals
};

/// RANSAC over random point triples followed by a least-squares refit on the
/// inliers of the best hypothesis.
inline RansacResult fit_plane_ransac(std::span<const Vec3> points, double inlier_dist,
                                     int iterations, std::uint64_t seed)
{
  if (points.size() < 3)
  {
    throw std::invalid_argument("plane fit needs at least 3 points");
  }
  util::Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  // Score on a fixed subsample to bound cost.
  const std::size_t stride = std::max<std::size_t>(1, points.size() / 4000);
  std::size_t best_count = 0;
  Plane best;
  bool found = false;
  for (int it = 0; it < iterations; ++it)
  {
    const Vec3& a = points[pick(rng)];
    const Vec3& b = points[pick(rng)];
    const Vec3& c = points[pick(rng)];
    const Vec3 n = (b - a).cross(c - a);
    if (n.norm() < 1e-12)
    {
      continue;
    }
    const Plane h{n.normalized(), n.normalized().dot(a)};
    std::size_t count = 0;
    for (std::size_t i = 0; i < points.size(); i += stride)
    {
      if (std::abs(h.signed_distance(points[i])) <= inlier_dist)
      {
        ++count;
      }
    }
    if (!found || count > best_count)
    {
      best = h;
      best_count = count;
      found = true;
    }
  }
  if (!found)
  {
    throw std::invalid_argument("no non-degenerate plane hypothesis");
  }
  RansacResult out;
  out.plane = best;
  for (int refit = 0; refit < 2; ++refit)
  {
    std::vector<Vec3> in;
    out.inliers.clear();
    for (std::size_t i = 0; i < points.size(); ++i)
    {
      if (std::abs(out.plane.signed_distance(points[i])) <= inlier_dist)
      {
        out.inliers.push_back(static_cast<std::uint32_t>(i));
        in.push_back(points[i]);
      }
    }
    out.plane = fit_plane(in);
  }
  std::vector<double> r;
  r.reserve(out.inliers.size());
  for (const auto i : out.inliers)
  {
    r.push_back(std::abs(out.plane.signed_distance(points[i])));
  }
  std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2), r.end());
  out.residual_sigma = 1.4826 * r[r.size() / 2];
  return out;
}

/// Back-projected depth pixels in the camera frame.
struct PointCloud
{
  PointList points;
  std::vector<std::uint32_t> pixels;  // y * width + x
};

inline PointCloud backproject(const FloatImage& depth, const CameraIntrinsics& cam)
{
  PointCloud cloud;
  for (int y = 0; y < depth.height(); ++y)
  {
    for (int x = 0; x < depth.width(); ++x)
    {
      const double z = depth(x, y);
      if (z > 0.0 && std::isfinite(z))
      {
        cloud.points.emplace_back(z * (x - cam.cx) / cam.fx, z * (y - cam.cy) / cam.fy, z);
        cloud.pixels.push_back(static_cast<std::uint32_t>(y * depth.width() + x));
      }
    }
  }
  return cloud;
}

/// Points strictly more than `height_eps` above the plane (object side is the
/// positive side). An empty result is a failed view.
inline PointCloud segment_object(const PointCloud& cloud, const Plane& plane, double height_eps)
{
  PointCloud out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
  {
    if (plane.signed_distance(cloud.points[i]) > height_eps)
    {
      out.points.push_back(cloud.points[i]);
      if (i < cloud.pixels.size())
      {
        out.pixels.push_back(cloud.pixels[i]);
      }
    }
  }
  if (out.points.empty())
  {
    throw PipelineError(PipelineStage::segmentation, "no points above the turntable plane");
  }
  return out;
}

inline PointList segment_object(std::span<const Vec3> points, const Plane& plane,
                                double height_eps)
{
  PointCloud cloud;
  cloud.points.assign(points.begin(), points.end());
  return segment_object(cloud, plane, height_eps).points;
}
}  // namespace contactscan::poseest
