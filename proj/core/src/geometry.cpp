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

#include "ldikit/geometry.hpp"

#include <stdexcept>

namespace ldikit {

Mat3 Mat3::rotation_x(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return r;
}

Mat3 Mat3::rotation_y(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return r;
}

Mat3 Mat3::rotation_z(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::determinant() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation.transposed();
  return {rt, rt * (translation * -1.0)};
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
  return {rotation * inner.rotation, rotation * inner.translation + translation};
}

bool RigidTransform::is_rigid(double tol) const {
  const Mat3 gram = rotation.transposed() * rotation;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expected = (i == j) ? 1.0 : 0.0;
      if (std::fabs(gram(i, j) - expected) > tol) return false;
    }
  }
  return std::fabs(rotation.determinant() - 1.0) <= tol;
}

ProjectedPoint project(double x, double y, double d, const ViewTransform& view) {
  const Vec3 u = view.source_intrinsics.unproject(x, y);
  const Vec3 up = view.relative.rotation * u + view.relative.translation * d;
  ProjectedPoint out;
  if (!(up.z > kBehindCameraEpsilon)) {
    return out;  // valid stays false
  }
  const Intrinsics& kt = view.target_intrinsics;
  const double inv_z = 1.0 / up.z;  // same form as project_with_jacobian, bit for bit
  out.x = kt.fx * up.x * inv_z + kt.cx;
  out.y = kt.fy * up.y * inv_z + kt.cy;
  out.d = d * inv_z;
  out.valid = std::isfinite(out.x) && std::isfinite(out.y) && std::isfinite(out.d);
  return out;
}

ProjectionJacobian project_gradient(double x, double y, double d, const ViewTransform& view) {
  const Vec3 u = view.source_intrinsics.unproject(x, y);
  const Vec3 t = view.relative.translation;
  const Vec3 up = view.relative.rotation * u + t * d;
  if (!(up.z > kBehindCameraEpsilon)) {
    throw std::invalid_argument("project_gradient: point is behind the target camera");
  }
  // d(up)/dd = t, so quotient-rule through the renormalization by up.z.
  const double inv_z = 1.0 / up.z;
  const double inv_z2 = inv_z * inv_z;
  const Intrinsics& kt = view.target_intrinsics;
  ProjectionJacobian j;
  j.dx_dd = kt.fx * (t.x * up.z - up.x * t.z) * inv_z2;
  j.dy_dd = kt.fy * (t.y * up.z - up.y * t.z) * inv_z2;
  j.dd_dd = inv_z - d * t.z * inv_z2;
  return j;
}

bool project_with_jacobian(double x, double y, double d, const ViewTransform& view,
                           ProjectedPoint& point, ProjectionJacobian& jacobian) {
  const Vec3 u = view.source_intrinsics.unproject(x, y);
  const Vec3 t = view.relative.translation;
  const Vec3 up = view.relative.rotation * u + t * d;
  if (!(up.z > kBehindCameraEpsilon)) return false;
  const double inv_z = 1.0 / up.z;
  const double inv_z2 = inv_z * inv_z;
  const Intrinsics& kt = view.target_intrinsics;
  point.x = kt.fx * up.x * inv_z + kt.cx;
  point.y = kt.fy * up.y * inv_z + kt.cy;
  point.d = d * inv_z;
  point.valid = std::isfinite(point.x) && std::isfinite(point.y) && std::isfinite(point.d);
  jacobian.dx_dd = kt.fx * (t.x * up.z - up.x * t.z) * inv_z2;
  jacobian.dy_dd = kt.fy * (t.y * up.z - up.y * t.z) * inv_z2;
  jacobian.dd_dd = inv_z - d * t.z * inv_z2;
  return point.valid;
}

Intrinsics scale_intrinsics(const Intrinsics& k, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale_intrinsics: factor must be positive");
  Intrinsics out;
  out.fx = k.fx * factor;
  out.fy = k.fy * factor;
  out.cx = (k.cx + 0.5) * factor - 0.5;
  out.cy = (k.cy + 0.5) * factor - 0.5;
  return out;
}

}  // namespace ldikit
