#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "contactscan/core/types.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::repr
{
/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(util::Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct SurfaceSamples
{
  PointList points;
  std::vector<std::uint32_t> faces;
};

/// Area-weighted face choice, uniform barycentric placement.
inline SurfaceSamples sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed)
{
  if (mesh.empty())
  {
    throw std::invalid_argument("cannot sample an empty mesh");
  }
  if (n == 0)
  {
    throw std::invalid_argument("sample count must be positive");
  }
  std::vector<double> cdf(mesh.num_faces());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
  {
    total += mesh.face_area(f);
    cdf[f] = total;
  }
  util::Rng rng(seed);
  SurfaceSamples out;
  out.points.reserve(n);
  out.faces.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    const double target = unit_uniform(rng) * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    const auto f = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    const double r1 = std::sqrt(unit_uniform(rng));
    const double r2 = unit_uniform(rng);
    const Face& t = mesh.faces()[f];
    const Vec3& a = mesh.vertices()[t[0]];
    const Vec3& b = mesh.vertices()[t[1]];
    const Vec3& c = mesh.vertices()[t[2]];
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.faces.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}
}  // namespace contactscan::repr
