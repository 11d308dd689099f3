#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "contactscan/util/rng.hpp"

namespace contactscan
{
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<std::uint32_t, 3>;
using PointList = std::vector<Vec3>;

/// Faces with less area than this (m^2) are treated as degenerate.
inline constexpr double kDegenerateFaceArea = 1e-18;

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c)
{
  return 0.5 * (b - a).cross(c - a).norm();
}

/// Indexed triangle mesh in meters. Immutable once built; degenerate faces are
/// dropped on construction and vertex normals are area-weighted.
class TriMesh
{
public:
  TriMesh() = default;

  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
      : vertices_(std::move(vertices))
  {
    const auto n = vertices_.size();
    faces_.reserve(faces.size());
    for (const Face& f : faces)
    {
      for (const auto idx : f)
      {
        if (idx >= n)
        {
          throw std::invalid_argument("face index " + std::to_string(idx) +
                                      " out of range for " + std::to_string(n) +
                                      " vertices");
        }
      }
      if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2] ||
          triangle_area(vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]) <=
              kDegenerateFaceArea)
      {
        ++dropped_faces_;
        continue;
      }
      faces_.push_back(f);
    }
    for (const Vec3& v : vertices_)
    {
      if (!v.allFinite())
      {
        throw std::invalid_argument("non-finite vertex coordinate");
      }
    }
    compute_normals();
    compute_fingerprint();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Vec3>& vertex_normals() const { return normals_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  bool empty() const { return faces_.empty(); }

  /// Number of input faces removed as degenerate.
  std::size_t dropped_faces() const { return dropped_faces_; }

  /// Content hash identifying this mesh; contact maps carry it.
  std::uint64_t fingerprint() const { return fingerprint_; }

  Vec3 face_normal(std::size_t f) const
  {
    const Face& t = faces_[f];
    return (vertices_[t[1]] - vertices_[t[0]])
        .cross(vertices_[t[2]] - vertices_[t[0]])
        .normalized();
  }

  double face_area(std::size_t f) const
  {
    const Face& t = faces_[f];
    return triangle_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
  }

private:
  void compute_normals()
  {
    normals_.assign(vertices_.size(), Vec3::Zero());
    for (const Face& f : faces_)
    {
      // Unnormalized cross product has length 2 * area.
      const Vec3 n = (vertices_[f[1]] - vertices_[f[0]])
                         .cross(vertices_[f[2]] - vertices_[f[0]]);
      for (const auto idx : f)
      {
        normals_[idx] += n;
      }
    }
    for (Vec3& n : normals_)
    {
      const double len = n.norm();
      n = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
    }
  }

  void compute_fingerprint()
  {
    std::uint64_t h = util::fnv1a("trimesh");
    for (const Vec3& v : vertices_)
    {
      h = util::fnv1a(std::string_view(reinterpret_cast<const char*>(v.data()),
                                       3 * sizeof(double)),
                      h);
    }
    for (const Face& f : faces_)
    {
      h = util::fnv1a(std::string_view(reinterpret_cast<const char*>(f.data()),
                                       3 * sizeof(std::uint32_t)),
                      h);
    }
    fingerprint_ = h;
  }

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Vec3> normals_;
  std::size_t dropped_faces_ = 0;
  std::uint64_t fingerprint_ = 0;
};

/// Per-vertex contact values in [0, 1] bound to one TriMesh.
class ContactMap
{
public:
  ContactMap() = default;

  ContactMap(const TriMesh& mesh, std::vector<double> values)
      : values_(std::move(values)), mesh_fingerprint_(mesh.fingerprint())
  {
    if (values_.size() != mesh.num_vertices())
    {
      throw std::invalid_argument("contact map has " + std::to_string(values_.size()) +
                                  " values for a mesh with " +
                                  std::to_string(mesh.num_vertices()) + " vertices");
    }
    for (const double v : values_)
    {
      if (!(v >= 0.0 && v <= 1.0))
      {
        throw std::invalid_argument("contact value outside [0, 1]: " +
                                    std::to_string(v));
      }
    }
  }

  static ContactMap constant(const TriMesh& mesh, double value)
  {
    return ContactMap(mesh, std::vector<double>(mesh.num_vertices(), value));
  }

  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t mesh_fingerprint() const { return mesh_fingerprint_; }

  bool belongs_to(const TriMesh& mesh) const
  {
    return mesh_fingerprint_ == mesh.fingerprint() && values_.size() == mesh.num_vertices();
  }

  void require_mesh(const TriMesh& mesh) const
  {
    if (!belongs_to(mesh))
    {
      throw std::invalid_argument("contact map does not belong to this mesh");
    }
  }

  bool operator==(const ContactMap&) const = default;

private:
  std::vector<double> values_;
  std::uint64_t mesh_fingerprint_ = 0;
};

/// Rotation about a unit axis by `angle` radians. Quarter turns are exact.
inline Mat3 axis_angle_rotation(const Vec3& axis, double angle)
{
  const double quarter = angle / (std::numbers::pi / 2.0);
  const double nearest = std::round(quarter);
  double c = std::cos(angle);
  double s = std::sin(angle);
  if (std::abs(quarter - nearest) < 1e-12)
  {
    static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
    static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
    const int q = ((static_cast<int>(nearest) % 4) + 4) % 4;
    c = kCos[q];
    s = kSin[q];
  }
  const Vec3 a = axis.normalized();
  Mat3 k;
  k << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return Mat3::Identity() * c + s * k + (1.0 - c) * a * a.transpose();
}

/// Nearest rotation matrix in the Frobenius sense.
inline Mat3 project_to_rotation(const Mat3& m)
{
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

/// Rigid transform p' = R p + t. Maps object frame to camera frame unless
/// documented otherwise.
class RigidPose
{
public:
  static constexpr double kTolerance = 1e-9;

  RigidPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  RigidPose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation)
  {
    if (!rotation.allFinite() || !translation.allFinite())
    {
      throw std::invalid_argument("non-finite pose");
    }
    if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() >
            kTolerance ||
        std::abs(rotation.determinant() - 1.0) > kTolerance)
    {
      throw std::invalid_argument("pose rotation is not a proper rotation");
    }
  }

  static RigidPose identity() { return {}; }

  static RigidPose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  static RigidPose from_axis_angle(const Vec3& axis, double angle,
                                   const Vec3& t = Vec3::Zero())
  {
    return {axis_angle_rotation(axis, angle), t};
  }

  /// Builds a pose from a nearly orthonormal matrix by projecting onto SO(3).
  static RigidPose orthonormalized(const Mat3& rotation, const Vec3& translation)
  {
    return {project_to_rotation(rotation), translation};
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  RigidPose inverse() const
  {
    const Mat3 rt = rotation_.transpose();
    return RigidPose(rt, -(rt * translation_), Unchecked{});
  }

  /// (a * b).apply(p) == a.apply(b.apply(p))
  friend RigidPose operator*(const RigidPose& a, const RigidPose& b)
  {
    const Mat3 r = a.rotation_ * b.rotation_;
    const Vec3 t = a.rotation_ * b.translation_ + a.translation_;
    // Re-project only once rounding drift becomes visible.
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12)
    {
      return RigidPose::orthonormalized(r, t);
    }
    return RigidPose(r, t, Unchecked{});
  }

  /// Angle (radians) of the relative rotation between two poses.
  double rotation_angle_to(const RigidPose& other) const
  {
    const Mat3 rel = rotation_.transpose() * other.rotation_;
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    // acos loses precision near 0; use the skew part there.
    const Vec3 skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    return std::atan2(0.5 * skew.norm(), c);
  }

  double translation_distance_to(const RigidPose& other) const
  {
    return (translation_ - other.translation_).norm();
  }

  /// Row-major [R | t], 12 values.
  std::array<double, 12> to_row_major() const
  {
    std::array<double, 12> out{};
    for (int r = 0; r < 3; ++r)
    {
      for (int c = 0; c < 3; ++c)
      {
        out[r * 4 + c] = rotation_(r, c);
      }
      out[r * 4 + 3] = translation_(r);
    }
    return out;
  }

  static RigidPose from_row_major(const std::array<double, 12>& v)
  {
    Mat3 r;
    Vec3 t;
    for (int i = 0; i < 3; ++i)
    {
      for (int c = 0; c < 3; ++c)
      {
        r(i, c) = v[i * 4 + c];
      }
      t(i) = v[i * 4 + 3];
    }
    return {r, t};
  }

private:
  struct Unchecked
  {
  };
  RigidPose(const Mat3& r, const Vec3& t, Unchecked) : rotation_(r), translation_(t) {}

  Mat3 rotation_;
  Vec3 translation_;
};

struct CameraIntrinsics
{
  double fx = 800.0;
  double fy = 800.0;
  double cx = 320.0;
  double cy = 256.0;
  int width = 640;
  int height = 512;

  void validate() const
  {
    if (!(fx > 0.0 && fy > 0.0))
    {
      throw std::invalid_argument("focal lengths must be positive");
    }
    if (width <= 0 || height <= 0)
    {
      throw std::invalid_argument("image size must be positive");
    }
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    {
      throw std::invalid_argument("principal point outside the image");
    }
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

enum class SymmetryKind
{
  none,
  axial,
};

struct SymmetrySpec
{
  SymmetryKind kind = SymmetryKind::none;
  Vec3 axis = Vec3::UnitZ();
  int n_test_angles = 36;

  static SymmetrySpec axial_about(const Vec3& axis, int n_test_angles = 36)
  {
    SymmetrySpec s{SymmetryKind::axial, axis, n_test_angles};
    s.validate();
    return s;
  }

  void validate() const
  {
    if (n_test_angles <= 0)
    {
      throw std::invalid_argument("n_test_angles must be positive");
    }
    if (kind == SymmetryKind::axial && std::abs(axis.norm() - 1.0) > 1e-9)
    {
      throw std::invalid_argument("symmetry axis must be unit length");
    }
  }
};
}  // namespace contactscan
