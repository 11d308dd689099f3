#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactscan/analysis/config.hpp"
#include "contactscan/core/types.hpp"

namespace contactscan::analysis
{
/// Total area of faces with at least one vertex above the contact threshold.
inline double contact_area(const TriMesh& mesh, const ContactMap& map, const AnalysisConfig& cfg = {})
{
  map.require_mesh(mesh);
  double area = 0.0;
  for (std::size_t f = 0; f < mesh.faces().size(); ++f)
  {
    const Face& t = mesh.faces()[f];
    if (map[t[0]] > cfg.contact_threshold || map[t[1]] > cfg.contact_threshold ||
        map[t[2]] > cfg.contact_threshold)
    {
      area += mesh.face_area(f);
    }
  }
  return area;
}

struct ActiveArea
{
  std::string name;
  std::vector<std::uint32_t> vertices;

  void validate(const TriMesh& mesh) const
  {
    if (vertices.empty())
    {
      throw std::invalid_argument("active area '" + name + "' has no vertices");
    }
    for (const auto v : vertices)
    {
      if (v >= mesh.num_vertices())
      {
        throw std::invalid_argument("active area '" + name + "' references vertex " +
                                    std::to_string(v) + " outside the mesh");
      }
    }
  }
};

inline bool touches(const ContactMap& map, const ActiveArea& area, double threshold)
{
  for (const auto v : area.vertices)
  {
    if (map[v] > threshold)
    {
      return true;
    }
  }
  return false;
}

/// Fraction of maps with any active-area vertex above the threshold.
inline double active_area_fraction(const TriMesh& mesh, const std::vector<ContactMap>& maps,
                                   const ActiveArea& area, const AnalysisConfig& cfg = {})
{
  area.validate(mesh);
  if (maps.empty())
  {
    throw std::invalid_argument("active area fraction of an empty cohort");
  }
  std::size_t hit = 0;
  for (const ContactMap& m : maps)
  {
    m.require_mesh(mesh);
    hit += touches(m, area, cfg.contact_threshold);
  }
  return static_cast<double>(hit) / static_cast<double>(maps.size());
}

/// Mean over participants of the summed fingertip areas, doubled for
/// objects grasped with both hands.
inline double fingertip_bound(const std::vector<std::vector<double>>& fingertip_areas,
                              bool bimanual_object)
{
  if (fingertip_areas.empty())
  {
    throw std::invalid_argument("fingertip bound needs at least one participant");
  }
  double total = 0.0;
  for (const auto& participant : fingertip_areas)
  {
    double s = 0.0;
    for (const double a : participant)
    {
      if (!(a >= 0.0))
      {
        throw std::invalid_argument("fingertip areas must be non-negative");
      }
      s += a;
    }
    total += s;
  }
  const double mean = total / static_cast<double>(fingertip_areas.size());
  return bimanual_object ? 2.0 * mean : mean;
}
}  // namespace contactscan::analysis
