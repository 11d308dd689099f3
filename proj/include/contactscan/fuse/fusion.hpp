#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "contactscan/core/error.hpp"
#include "contactscan/core/types.hpp"
#include "contactscan/fuse/project.hpp"
#include "contactscan/synth/scan.hpp"
#include "contactscan/util/parallel.hpp"

namespace contactscan::fuse
{
struct FusionParams
{
  double depth_eps = 0.006;    // m
  double ambient_level = 0.0;  // subtracted from intensities: c = (I - a) / (1 - a)
  unsigned threads = 1;

  void validate() const
  {
    if (!(depth_eps > 0.0))
    {
      throw std::invalid_argument("depth_eps must be positive");
    }
    if (!(ambient_level >= 0.0 && ambient_level < 1.0))
    {
      throw std::invalid_argument("ambient_level must lie in [0, 1)");
    }
  }
};

struct FusionResult
{
  ContactMap map;
  std::vector<std::uint32_t> coverage;   // valid observations per vertex
  std::vector<std::uint32_t> uncovered;  // vertices never observed (value 0)
};

/// Views sorted by (angle, index); fusion sums in this order.
inline std::vector<std::size_t> fusion_order(const synth::ScanSequence& scan)
{
  std::vector<std::size_t> order(scan.views.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scan.views[a].angle < scan.views[b].angle;
  });
  return order;
}

inline std::vector<std::vector<VertexObservation>> observe_all(const TriMesh& mesh,
                                                               const synth::ScanSequence& scan,
                                                               std::span<const RigidPose> poses,
                                                               const FusionParams& params)
{
  std::vector<std::vector<VertexObservation>> obs(scan.views.size());
  util::parallel_for(0, scan.views.size(), params.threads, [&](std::size_t i) {
    const synth::View& v = scan.views[i];
    obs[i] = observe_view(mesh, poses[i], scan.rig.camera, v.depth, v.thermal, params.depth_eps,
                          static_cast<int>(i));
  });
  return obs;
}

/// Per-vertex weighted mean of observed intensities (weight = viewing cosine).
inline FusionResult fuse_observations(const TriMesh& mesh,
                                      const std::vector<std::vector<VertexObservation>>& obs,
                                      std::span<const std::size_t> order, double ambient_level)
{
  const std::size_t n = mesh.num_vertices();
  std::vector<double> sum(n, 0.0);
  std::vector<double> wsum(n, 0.0);
  std::vector<double> lo(n, 1.0);
  std::vector<double> hi(n, 0.0);
  FusionResult out;
  out.coverage.assign(n, 0);
  for (const std::size_t view : order)
  {
    const auto& o = obs[view];
    for (std::size_t k = 0; k < n; ++k)
    {
      if (!o[k].valid)
      {
        continue;
      }
      sum[k] += o[k].weight * o[k].intensity;
      wsum[k] += o[k].weight;
      lo[k] = std::min(lo[k], o[k].intensity);
      hi[k] = std::max(hi[k], o[k].intensity);
      ++out.coverage[k];
    }
  }
  std::vector<double> values(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
  {
    if (out.coverage[k] == 0)
    {
      out.uncovered.push_back(static_cast<std::uint32_t>(k));
      continue;
    }
    const double mean = std::clamp(sum[k] / wsum[k], lo[k], hi[k]);
    values[k] = std::clamp((mean - ambient_level) / (1.0 - ambient_level), 0.0, 1.0);
  }
  out.map = ContactMap(mesh, std::move(values));
  return out;
}

/// Texture-maps every view's thermal image onto the mesh. `poses[i]` maps the
/// object frame into the camera frame of view i.
inline FusionResult fuse_views(const TriMesh& mesh, const synth::ScanSequence& scan,
                               std::span<const RigidPose> poses, const FusionParams& params = {})
{
  params.validate();
  if (poses.size() != scan.views.size())
  {
    throw std::invalid_argument("one pose per view required");
  }
  const auto obs = observe_all(mesh, scan, poses, params);
  const auto order = fusion_order(scan);
  FusionResult out = fuse_observations(mesh, obs, order, params.ambient_level);
  if (out.uncovered.size() == mesh.num_vertices())
  {
    throw PipelineError(PipelineStage::fusion, "no vertex was observed in any view");
  }
  return out;
}

// Coverage sidecar: "# vertex observations" header, then one
// "<vertex> <count>" line per vertex.
inline void write_coverage(std::ostream& out, std::span<const std::uint32_t> coverage)
{
  out << "# vertex observations\n";
  for (std::size_t i = 0; i < coverage.size(); ++i)
  {
    out << i << ' ' << coverage[i] << '\n';
  }
}
}  // namespace contactscan::fuse
