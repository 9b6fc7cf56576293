// Copyright 2026 The ldikit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>

namespace ldikit {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Row-major 3x3 matrix. Only what the camera model needs.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }
  static Mat3 rotation_x(double radians);
  static Mat3 rotation_y(double radians);
  static Mat3 rotation_z(double radians);

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double determinant() const;
};

/// Pinhole intrinsics in pixels. Integer pixel (i, j) sits at continuous
/// coordinate (i, j) exactly.
struct Intrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && std::isfinite(fx) && std::isfinite(fy) &&
           std::isfinite(cx) && std::isfinite(cy);
  }

  /// K^-1 applied to (x, y, 1).
  Vec3 unproject(double x, double y) const { return {(x - cx) / fx, (y - cy) / fy, 1.0}; }
};

/// Rotation + translation, applied as p' = R p + t. Translation in meters.
struct RigidTransform {
  Mat3 rotation;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  RigidTransform compose(const RigidTransform& inner) const;

  /// Orthonormality and det(R) = +1 within tol.
  bool is_rigid(double tol = 1e-9) const;
};

/// The source->target camera bundle (K_s, K_t, R, t).
struct ViewTransform {
  Intrinsics source_intrinsics;
  Intrinsics target_intrinsics;
  RigidTransform relative;

  /// The target->source transform: swapped intrinsics, inverted motion.
  ViewTransform inverted() const {
    return {target_intrinsics, source_intrinsics, relative.inverse()};
  }

  static ViewTransform identity(const Intrinsics& k) {
    return {k, k, RigidTransform{}};
  }
};

/// Result of forward-projecting a source pixel with inverse depth: continuous
/// target pixel coordinates and target-frame inverse depth. `valid` is false
/// for points at or behind the target camera plane; such points carry no
/// meaningful coordinates and must contribute nothing downstream.
struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  double d = 0.0;
  bool valid = false;
};

/// d(x, y, d)/d(source inverse depth) of project(); cameras and pixel
/// coordinates are fixed inputs during fitting, so this is the only partial
/// the optimizer needs.
struct ProjectionJacobian {
  double dx_dd = 0.0;
  double dy_dd = 0.0;
  double dd_dd = 0.0;
};

inline constexpr double kBehindCameraEpsilon = 1e-8;

/// Maps a source pixel (x, y) with inverse depth d > 0 into the target frame:
/// u = K_s^-1 (x, y, 1), u' = R u + t d, then renormalizes so the third
/// homogeneous coordinate is 1, giving pixel coordinates K_t u' / u'_z and
/// inverse depth d / u'_z. Points with u'_z <= 1e-8 come back invalid.
ProjectedPoint project(double x, double y, double d, const ViewTransform& view);

/// Analytic derivative of project() w.r.t. d. Throws if the point is invalid.
ProjectionJacobian project_gradient(double x, double y, double d, const ViewTransform& view);

/// project() and project_gradient() fused over one unprojection; returns
/// false (leaving outputs untouched) for invalid points instead of throwing.
bool project_with_jacobian(double x, double y, double d, const ViewTransform& view,
                           ProjectedPoint& point, ProjectionJacobian& jacobian);

/// Rescales intrinsics for a resized pixel grid. Under the pixel-center
/// convention the principal point maps as c' = (c + 0.5) * factor - 0.5.
Intrinsics scale_intrinsics(const Intrinsics& k, double factor);

}  // namespace ldikit
