#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "contactscan/core/types.hpp"
#include "contactscan/synth/raycast.hpp"
#include "contactscan/util/image.hpp"
#include "contactscan/util/parallel.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::synth
{
/// Per-pixel hit labels of a rendered scene.
enum PixelLabel : std::uint8_t
{
  kBackground = 0,
  kTurntable = 1,
  kObject = 2,
};

struct NoiseParams
{
  double depth_sigma = 0.0;    // m
  double thermal_sigma = 0.0;  // unitless
  double ambient_level = 0.0;  // thermal level of untouched object surface, [0, 1)
  std::uint64_t seed = 0;

  void validate() const
  {
    if (!(depth_sigma >= 0.0 && thermal_sigma >= 0.0))
    {
      throw std::invalid_argument("noise sigmas must be non-negative");
    }
    if (!(ambient_level >= 0.0 && ambient_level < 1.0))
    {
      throw std::invalid_argument("ambient_level must lie in [0, 1)");
    }
  }

  bool operator==(const NoiseParams&) const = default;
};

/// A mesh placed in the camera frame for rendering.
struct SceneItem
{
  const TriMesh* mesh = nullptr;
  RigidPose pose;  // mesh frame -> camera frame
  PixelLabel label = kObject;
};

/// Raw ray-cast result for every pixel. Depth is the camera-frame z of the
/// nearest hit (0 = no hit).
struct HitBuffer
{
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::int32_t> item;  // index into the scene, -1 = miss
  std::vector<std::uint32_t> face;
  std::vector<double> u;
  std::vector<double> v;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Ray direction through pixel (x, y) scaled so that its z component is 1;
/// the hit parameter is then the z-depth.
inline Vec3 pixel_ray(const CameraIntrinsics& cam, double x, double y)
{
  return Vec3((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
}

inline HitBuffer cast_scene(std::span<const SceneItem> scene, const CameraIntrinsics& cam,
                            unsigned threads = 1)
{
  cam.validate();
  std::vector<std::array<Vec3, 3>> tris;
  std::vector<std::pair<std::int32_t, std::uint32_t>> owner;
  for (std::size_t s = 0; s < scene.size(); ++s)
  {
    const TriMesh& m = *scene[s].mesh;
    std::vector<Vec3> v;
    v.reserve(m.num_vertices());
    for (const Vec3& p : m.vertices())
    {
      v.push_back(scene[s].pose.apply(p));
    }
    for (std::size_t f = 0; f < m.num_faces(); ++f)
    {
      const Face& t = m.faces()[f];
      tris.push_back({v[t[0]], v[t[1]], v[t[2]]});
      owner.emplace_back(static_cast<std::int32_t>(s), static_cast<std::uint32_t>(f));
    }
  }
  const Bvh bvh(std::move(tris));

  HitBuffer out;
  out.width = cam.width;
  out.height = cam.height;
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  out.depth.assign(n, 0.0);
  out.item.assign(n, -1);
  out.face.assign(n, 0);
  out.u.assign(n, 0.0);
  out.v.assign(n, 0.0);
  util::parallel_for(0, static_cast<std::size_t>(cam.height), threads, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < cam.width; ++x)
    {
      const auto hit = bvh.intersect(Vec3::Zero(), pixel_ray(cam, x, y));
      if (!hit)
      {
        continue;
      }
      const std::size_t i = out.index(x, y);
      out.depth[i] = hit->t;
      out.item[i] = owner[hit->triangle].first;
      out.face[i] = owner[hit->triangle].second;
      out.u[i] = hit->u;
      out.v[i] = hit->v;
    }
  });
  return out;
}

/// Depth image of the hit buffer, with optional Gaussian depth noise.
inline FloatImage depth_image(const HitBuffer& hits, double sigma = 0.0,
                              std::uint64_t seed = 0)
{
  FloatImage img(hits.width, hits.height, 0.0f);
  util::Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  for (std::size_t i = 0; i < hits.depth.size(); ++i)
  {
    if (hits.item[i] < 0)
    {
      continue;
    }
    double d = hits.depth[i];
    if (sigma > 0.0)
    {
      d = std::max(1e-6, d + noise(rng));
    }
    img.data()[i] = static_cast<float>(d);
  }
  return img;
}

inline LabelImage label_image(std::span<const SceneItem> scene, const HitBuffer& hits)
{
  LabelImage img(hits.width, hits.height, kBackground);
  for (std::size_t i = 0; i < hits.item.size(); ++i)
  {
    if (hits.item[i] >= 0)
    {
      img.data()[i] = scene[static_cast<std::size_t>(hits.item[i])].label;
    }
  }
  return img;
}

/// Thermal image: barycentric interpolation of the contact values of scene
/// item `object_item`, lifted by the ambient level, plus clamped Gaussian
/// noise. Everything else is background (0).
inline FloatImage thermal_image(const HitBuffer& hits, std::int32_t object_item,
                                const TriMesh& mesh, const ContactMap& contact,
                                const NoiseParams& noise, std::uint64_t seed)
{
  contact.require_mesh(mesh);
  noise.validate();
  FloatImage img(hits.width, hits.height, 0.0f);
  util::Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, noise.thermal_sigma > 0.0 ? noise.thermal_sigma : 1.0);
  for (std::size_t i = 0; i < hits.item.size(); ++i)
  {
    if (hits.item[i] != object_item)
    {
      continue;
    }
    const Face& f = mesh.faces()[hits.face[i]];
    const double u = hits.u[i];
    const double v = hits.v[i];
    const double c = (1.0 - u - v) * contact[f[0]] + u * contact[f[1]] + v * contact[f[2]];
    double value = noise.ambient_level + (1.0 - noise.ambient_level) * c;
    if (noise.thermal_sigma > 0.0)
    {
      value += gauss(rng);
    }
    img.data()[i] = static_cast<float>(std::clamp(value, 0.0, 1.0));
  }
  return img;
}

inline FloatImage render_depth(const TriMesh& mesh, const RigidPose& pose,
                               const CameraIntrinsics& cam, unsigned threads = 1)
{
  const SceneItem item{&mesh, pose, kObject};
  return depth_image(cast_scene(std::span<const SceneItem>(&item, 1), cam, threads));
}

inline FloatImage render_thermal(const TriMesh& mesh, const ContactMap& contact,
                                 const RigidPose& pose, const CameraIntrinsics& cam,
                                 const NoiseParams& noise, unsigned threads = 1)
{
  contact.require_mesh(mesh);
  const SceneItem item{&mesh, pose, kObject};
  const HitBuffer hits = cast_scene(std::span<const SceneItem>(&item, 1), cam, threads);
  return thermal_image(hits, 0, mesh, contact, noise, util::derive_seed(noise.seed, 1));
}
}  // namespace contactscan::synth
