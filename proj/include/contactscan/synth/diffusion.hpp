#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "contactscan/core/geometry.hpp"
#include "contactscan/core/types.hpp"

namespace contactscan::synth
{
/// Symmetric edge weight (cot a + cot b) / 2 per undirected edge, negative
/// weights clamped to 0.
struct EdgeWeight
{
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double w = 0.0;
};

inline std::vector<EdgeWeight> cotangent_weights(const TriMesh& mesh)
{
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> acc;
  const auto& v = mesh.vertices();
  for (const Face& f : mesh.faces())
  {
    for (int k = 0; k < 3; ++k)
    {
      const std::uint32_t o = f[k];
      std::uint32_t a = f[(k + 1) % 3];
      std::uint32_t b = f[(k + 2) % 3];
      const Vec3 ea = v[a] - v[o];
      const Vec3 eb = v[b] - v[o];
      const double s = ea.cross(eb).norm();
      const double cot = s > 0.0 ? ea.dot(eb) / s : 0.0;
      if (a > b)
      {
        std::swap(a, b);
      }
      acc[{a, b}] += 0.5 * cot;
    }
  }
  std::vector<EdgeWeight> out;
  out.reserve(acc.size());
  for (const auto& [e, w] : acc)
  {
    out.push_back({e.first, e.second, std::max(0.0, w)});
  }
  return out;
}

/// Heat diffusion of a contact map over the mesh surface for `time` seconds
/// with diffusivity `diffusivity` (m^2/s). Explicit Euler on the cotangent
/// Laplacian with lumped vertex areas; the step is subdivided for stability
/// and accuracy.
inline ContactMap diffuse_contact(const ContactMap& contact, const TriMesh& mesh, double time,
                                  double diffusivity)
{
  contact.require_mesh(mesh);
  if (!(time >= 0.0) || !std::isfinite(time))
  {
    throw std::invalid_argument("diffusion time must be non-negative");
  }
  if (!(diffusivity >= 0.0) || !std::isfinite(diffusivity))
  {
    throw std::invalid_argument("diffusivity must be non-negative");
  }
  std::vector<double> u = contact.values();
  if (time == 0.0 || diffusivity == 0.0)
  {
    return ContactMap(mesh, std::move(u));
  }
  const auto edges = cotangent_weights(mesh);
  const auto area = vertex_areas(mesh);
  std::vector<double> wsum(u.size(), 0.0);
  for (const auto& e : edges)
  {
    wsum[e.i] += e.w;
    wsum[e.j] += e.w;
  }
  double lambda_max = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
  {
    if (area[i] > 0.0)
    {
      lambda_max = std::max(lambda_max, diffusivity * wsum[i] / area[i]);
    }
  }
  if (lambda_max == 0.0)
  {
    return ContactMap(mesh, std::move(u));
  }
  const double dt_max = 0.01 / lambda_max;
  const auto steps = static_cast<std::size_t>(std::ceil(time / dt_max));
  const double dt = time / static_cast<double>(steps);
  std::vector<double> flux(u.size());
  for (std::size_t s = 0; s < steps; ++s)
  {
    std::fill(flux.begin(), flux.end(), 0.0);
    for (const auto& e : edges)
    {
      const double q = e.w * (u[e.j] - u[e.i]);
      flux[e.i] += q;
      flux[e.j] -= q;
    }
    for (std::size_t i = 0; i < u.size(); ++i)
    {
      if (area[i] > 0.0)
      {
        u[i] += dt * diffusivity * flux[i] / area[i];
      }
    }
  }
  for (double& x : u)
  {
    x = std::clamp(x, 0.0, 1.0);
  }
  return ContactMap(mesh, std::move(u));
}
}  // namespace contactscan::synth
