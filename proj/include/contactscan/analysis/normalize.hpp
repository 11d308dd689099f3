#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "contactscan/analysis/config.hpp"
#include "contactscan/core/types.hpp"

namespace contactscan::analysis
{
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// Logistic sigma(a x + b) with a, b chosen so the map minimum goes to
/// sigmoid_low and the maximum to sigmoid_high. The two endpoints are
/// returned exactly.
inline ContactMap normalize_sigmoid(const TriMesh& mesh, const ContactMap& map,
                                    const AnalysisConfig& cfg = {})
{
  cfg.validate();
  map.require_mesh(mesh);
  const auto [lo_it, hi_it] = std::minmax_element(map.values().begin(), map.values().end());
  if (lo_it == map.values().end() || !(*hi_it > *lo_it))
  {
    throw std::invalid_argument("sigmoid normalization needs at least two distinct values");
  }
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double z_lo = logit(cfg.sigmoid_low);
  const double z_hi = logit(cfg.sigmoid_high);
  const double a = (z_hi - z_lo) / (hi - lo);
  const double b = z_lo - a * lo;
  std::vector<double> out;
  out.reserve(map.size());
  for (const double x : map.values())
  {
    if (x == lo)
    {
      out.push_back(cfg.sigmoid_low);
    }
    else if (x == hi)
    {
      out.push_back(cfg.sigmoid_high);
    }
    else
    {
      out.push_back(1.0 / (1.0 + std::exp(-(a * x + b))));
    }
  }
  return ContactMap(mesh, std::move(out));
}
}  // namespace contactscan::analysis
