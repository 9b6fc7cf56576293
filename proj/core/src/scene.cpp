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

#include "ldikit/scene.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "ldikit/parallel.hpp"

namespace ldikit {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t hash_lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = seed ^ (static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ull) ^
                    (static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4full);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  return static_cast<double>(hash_lattice(seed, ix, iy) >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// Band-limited value noise in [-1, 1]: smoothstep-interpolated lattice values.
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = smoothstep(x - fx);
  const double ty = smoothstep(y - fy);
  const double v00 = lattice_value(seed, ix, iy);
  const double v10 = lattice_value(seed, ix + 1, iy);
  const double v01 = lattice_value(seed, ix, iy + 1);
  const double v11 = lattice_value(seed, ix + 1, iy + 1);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return 2.0 * (a + (b - a) * ty) - 1.0;
}

}  // namespace

std::array<double, 3> TextureParams::sample(double u, double v) const {
  const double t =
      0.5 + (u - 0.5) * gradient_dir[0] + (v - 0.5) * gradient_dir[1];
  const double tc = std::clamp(t, 0.0, 1.0);

  double n = 0.0;
  double amp = noise_amp;
  double freq = noise_freq;
  for (int o = 0; o < octaves; ++o) {
    n += amp * value_noise(noise_seed + static_cast<std::uint64_t>(o), u * freq, v * freq);
    amp *= 0.5;
    freq *= 2.0;
  }
  const double s =
      stripe_amp == 0.0
          ? 0.0
          : stripe_amp * std::sin(2.0 * kPi * stripe_freq * (u * stripe_dir[0] + v * stripe_dir[1]) +
                                  stripe_phase);

  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double base = color_a[static_cast<std::size_t>(c)] +
                        (color_b[static_cast<std::size_t>(c)] - color_a[static_cast<std::size_t>(c)]) * tc;
    out[static_cast<std::size_t>(c)] = std::clamp(base + n + s, 0.03, 0.97);
  }
  return out;
}

TextureParams TextureParams::random(Rng& rng) {
  TextureParams p;
  for (int c = 0; c < 3; ++c) {
    p.color_a[static_cast<std::size_t>(c)] = rng.uniform(0.08, 0.92);
    p.color_b[static_cast<std::size_t>(c)] = rng.uniform(0.08, 0.92);
  }
  const double ga = rng.uniform(0.0, 2.0 * kPi);
  p.gradient_dir = {std::cos(ga), std::sin(ga)};
  p.noise_seed = rng.next_u64();
  p.noise_amp = rng.uniform(0.08, 0.22);
  p.noise_freq = rng.uniform(2.5, 5.0);
  p.octaves = 3;
  if (rng.next_double() < 0.4) {
    p.stripe_amp = rng.uniform(0.05, 0.15);
    p.stripe_freq = rng.uniform(3.0, 9.0);
    p.stripe_phase = rng.uniform(0.0, 2.0 * kPi);
    const double sa = rng.uniform(0.0, 2.0 * kPi);
    p.stripe_dir = {std::cos(sa), std::sin(sa)};
  }
  return p;
}

bool SpritePlane::blob_contains(double u, double v) const {
  const double dx = u - blob_center[0];
  const double dy = v - blob_center[1];
  const double r = std::sqrt(dx * dx + dy * dy);
  const double theta = std::atan2(dy, dx);
  double radius = blob_radius;
  for (int k = 0; k < 4; ++k) {
    radius += blob_radius * blob_amp[static_cast<std::size_t>(k)] *
              std::cos((k + 2) * theta + blob_phase[static_cast<std::size_t>(k)]);
  }
  return r <= radius;
}

bool SpritePlane::opaque_at(double u, double v) const {
  if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return false;
  // Per-texel opacity: constant within each texel of the mask grid.
  const int res = mask_resolution;
  const int i = std::min(res - 1, static_cast<int>(u * res));
  const int j = std::min(res - 1, static_cast<int>(v * res));
  return blob_contains((i + 0.5) / res, (j + 0.5) / res);
}

Camera canonical_camera(int width, int height) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.intrinsics = {1.2 * width, 1.2 * height, (width - 1) / 2.0, (height - 1) / 2.0};
  return cam;
}

Camera scale_camera(const Camera& camera, double factor) {
  Camera out = camera;
  const double w = camera.width * factor;
  const double h = camera.height * factor;
  out.width = static_cast<int>(std::lround(w));
  out.height = static_cast<int>(std::lround(h));
  if (std::fabs(w - out.width) > 1e-9 || std::fabs(h - out.height) > 1e-9 || out.width < 1 ||
      out.height < 1) {
    throw std::invalid_argument("scale_camera: scaled grid is not integral");
  }
  out.intrinsics = scale_intrinsics(camera.intrinsics, factor);
  return out;
}

ViewTransform make_view_transform(const Camera& source, const Camera& target) {
  ViewTransform v;
  v.source_intrinsics = source.intrinsics;
  v.target_intrinsics = target.intrinsics;
  v.relative = target.world_from_camera.inverse().compose(source.world_from_camera);
  return v;
}

Camera sample_perturbed_camera(Rng& rng, const ViewSampleRanges& ranges,
                               const Camera& canonical) {
  const double deg = kPi / 180.0;
  RigidTransform local;
  local.rotation = Mat3::rotation_x(rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg) * deg) *
                   Mat3::rotation_y(rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg) * deg) *
                   Mat3::rotation_z(rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg) * deg);
  local.translation = {rng.uniform(-ranges.max_lateral, ranges.max_lateral),
                       rng.uniform(-ranges.max_vertical, ranges.max_vertical),
                       rng.uniform(-ranges.max_axial, ranges.max_axial)};
  Camera out = canonical;
  out.world_from_camera = canonical.world_from_camera.compose(local);
  return out;
}

ViewPairSample sample_view_pair(std::uint64_t seed, const ViewSampleRanges& ranges,
                                const Camera& canonical) {
  Rng rng(seed);
  const Camera perturbed = sample_perturbed_camera(rng, ranges, canonical);
  ViewPairSample sample;
  sample.canonical_is_source = rng.next_bool();
  sample.source = sample.canonical_is_source ? canonical : perturbed;
  sample.target = sample.canonical_is_source ? perturbed : canonical;
  sample.relative = make_view_transform(sample.source, sample.target);
  return sample;
}

Scene generate_scene(std::uint64_t seed, int n_obj_min, int n_obj_max) {
  if (n_obj_min < 1 || n_obj_min > n_obj_max || n_obj_max > 4) {
    throw std::invalid_argument("generate_scene: need 1 <= n_obj_min <= n_obj_max <= 4");
  }
  Rng rng(seed);
  Scene scene;
  scene.rng_seed = seed;
  scene.d_max = 1.0;

  const double z0 = Scene::kRoomNearZ, z1 = Scene::kRoomFarZ;
  // left, right, back, ceiling, floor
  scene.room[0] = {{-1.0, -1.0, z0}, {0.0, 0.0, z1 - z0}, {0.0, 2.0, 0.0}, {}};
  scene.room[1] = {{1.0, -1.0, z0}, {0.0, 0.0, z1 - z0}, {0.0, 2.0, 0.0}, {}};
  scene.room[2] = {{-1.0, -1.0, z1}, {2.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {}};
  scene.room[3] = {{-1.0, -1.0, z0}, {2.0, 0.0, 0.0}, {0.0, 0.0, z1 - z0}, {}};
  scene.room[4] = {{-1.0, 1.0, z0}, {2.0, 0.0, 0.0}, {0.0, 0.0, z1 - z0}, {}};
  for (RoomPlane& plane : scene.room) {
    Rng fork = rng.fork();
    plane.texture = TextureParams::random(fork);
  }

  const int n = n_obj_min + static_cast<int>(rng.next_below(
                                static_cast<std::uint64_t>(n_obj_max - n_obj_min + 1)));
  for (int i = 0; i < n; ++i) {
    SpritePlane sprite;
    // Left-to-right slots at strictly increasing depths; horizontal placement
    // stays inside the canonical frustum (half-width z/2.4 at depth z).
    sprite.z = 1.3 + 1.1 * ((i + 0.15 + 0.7 * rng.next_double()) / n);
    const double usable = std::min(sprite.z / 2.4 * 0.85, 0.92);
    const double slot = -1.0 + 2.0 * (i + 0.5) / n + rng.uniform(-0.3, 0.3) / n;
    sprite.center_x = slot * usable;
    sprite.width = rng.uniform(0.45, 0.75);
    sprite.height = rng.uniform(0.75, 1.25);
    const double max_half = 0.95 - std::fabs(sprite.center_x);
    sprite.width = std::min(sprite.width, 2.0 * max_half);
    sprite.height = std::min(sprite.height, 1.9);

    sprite.blob_radius = rng.uniform(0.38, 0.46);
    sprite.blob_center = {0.5, 0.6};
    for (int k = 0; k < 4; ++k) {
      sprite.blob_amp[static_cast<std::size_t>(k)] = rng.uniform(-0.35, 0.35) / (k + 2);
      sprite.blob_phase[static_cast<std::size_t>(k)] = rng.uniform(0.0, 2.0 * kPi);
    }
    Rng fork = rng.fork();
    sprite.texture = TextureParams::random(fork);
    scene.sprites.push_back(sprite);
  }
  return scene;
}

namespace {

struct Hit {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
  const TextureParams* texture = nullptr;
};

bool intersect_rect(const Vec3& origin, const Vec3& dir, const Vec3& rect_origin,
                    const Vec3& edge_u, const Vec3& edge_v, Hit& hit) {
  const Vec3 n = edge_u.cross(edge_v);
  const double denom = dir.dot(n);
  if (std::fabs(denom) < 1e-15) return false;
  const double t = (rect_origin - origin).dot(n) / denom;
  if (t <= 1e-9) return false;
  const Vec3 q = origin + dir * t - rect_origin;
  const double uu = q.dot(edge_u) / edge_u.dot(edge_u);
  const double vv = q.dot(edge_v) / edge_v.dot(edge_v);
  if (uu < 0.0 || uu > 1.0 || vv < 0.0 || vv > 1.0) return false;
  hit = {t, uu, vv, nullptr};
  return true;
}

/// All surface hits along the ray, nearest first. `t` equals camera-frame
/// depth when `dir` has unit z in the camera frame.
void enumerate_hits(const Scene& scene, const Vec3& origin, const Vec3& dir,
                    std::vector<Hit>& hits) {
  hits.clear();
  for (const RoomPlane& plane : scene.room) {
    Hit h;
    if (intersect_rect(origin, dir, plane.origin, plane.edge_u, plane.edge_v, h)) {
      h.texture = &plane.texture;
      hits.push_back(h);
    }
  }
  for (const SpritePlane& sprite : scene.sprites) {
    const Vec3 rect_origin{sprite.center_x - sprite.width / 2.0, 1.0 - sprite.height, sprite.z};
    const Vec3 edge_u{sprite.width, 0.0, 0.0};
    const Vec3 edge_v{0.0, sprite.height, 0.0};
    Hit h;
    if (intersect_rect(origin, dir, rect_origin, edge_u, edge_v, h) &&
        sprite.opaque_at(h.u, h.v)) {
      h.texture = &sprite.texture;
      hits.push_back(h);
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.t < b.t; });
}

struct PixelRay {
  Vec3 origin;
  Vec3 dir;  // world direction with unit z in the camera frame
};

PixelRay pixel_ray(const Camera& camera, double x, double y) {
  const Vec3 dir_cam = camera.intrinsics.unproject(x, y);
  return {camera.world_from_camera.translation, camera.world_from_camera.rotation * dir_cam};
}

}  // namespace

RaycastResult raycast(const Scene& scene, const Camera& camera, int width, int height) {
  RaycastResult out{Image(width, height, 3), Image(width, height, 1)};
  std::atomic<bool> escaped{false};
  parallel_chunks(static_cast<std::size_t>(height), 8, [&](std::size_t y0, std::size_t y1) {
    std::vector<Hit> hits;
    for (std::size_t y = y0; y < y1; ++y) {
      for (int x = 0; x < width; ++x) {
        const PixelRay ray =
            pixel_ray(camera, static_cast<double>(x), static_cast<double>(y));
        enumerate_hits(scene, ray.origin, ray.dir, hits);
        if (hits.empty()) {
          escaped = true;
          continue;
        }
        const Hit& h = hits.front();
        const auto rgb = h.texture->sample(h.u, h.v);
        for (int c = 0; c < 3; ++c) {
          out.color.at(x, static_cast<int>(y), c) = rgb[static_cast<std::size_t>(c)];
        }
        out.disparity.at(x, static_cast<int>(y)) = 1.0 / h.t;
      }
    }
  });
  if (escaped) {
    throw std::runtime_error("raycast: a ray escaped the room (camera outside supported range)");
  }
  return out;
}

GroundTruthLdi ground_truth_ldi(const Scene& scene, const Camera& camera, int width, int height,
                                int layers) {
  if (layers != 2) throw std::invalid_argument("ground_truth_ldi: only 2 layers supported");
  GroundTruthLdi out;
  out.ldi.d_max = scene.d_max;
  for (int l = 0; l < 2; ++l) {
    out.ldi.layers.push_back({Image(width, height, 3), Image(width, height, 1)});
  }
  out.second_surface = Image(width, height, 1, 0.0);
  std::atomic<bool> escaped{false};

  parallel_chunks(static_cast<std::size_t>(height), 8, [&](std::size_t y0, std::size_t y1) {
    std::vector<Hit> hits;
    for (std::size_t yy = y0; yy < y1; ++yy) {
      const int y = static_cast<int>(yy);
      for (int x = 0; x < width; ++x) {
        const PixelRay ray = pixel_ray(camera, static_cast<double>(x), static_cast<double>(y));
        enumerate_hits(scene, ray.origin, ray.dir, hits);
        if (hits.empty()) {
          escaped = true;
          continue;
        }
        const Hit& first = hits.front();
        const Hit* second = nullptr;
        for (const Hit& h : hits) {
          if (h.t > first.t + 1e-7) {
            second = &h;
            break;
          }
        }
        const Hit& back = second ? *second : first;  // repeat layer 0 when single-surface
        out.second_surface.at(x, y) = second ? 1.0 : 0.0;
        const auto rgb0 = first.texture->sample(first.u, first.v);
        const auto rgb1 = back.texture->sample(back.u, back.v);
        for (int c = 0; c < 3; ++c) {
          out.ldi.layers[0].texture.at(x, y, c) = rgb0[static_cast<std::size_t>(c)];
          out.ldi.layers[1].texture.at(x, y, c) = rgb1[static_cast<std::size_t>(c)];
        }
        out.ldi.layers[0].disparity.at(x, y) = 1.0 / first.t;
        out.ldi.layers[1].disparity.at(x, y) = 1.0 / back.t;
      }
    }
  });
  if (escaped) {
    throw std::runtime_error("ground_truth_ldi: a ray escaped the room");
  }
  return out;
}

Image disocclusion_mask(const Scene& scene, const Camera& source, const Camera& target, int width,
                        int height) {
  Camera target_scaled = target;
  if (width != target.width || height != target.height) {
    target_scaled = scale_camera(target, static_cast<double>(width) / target.width);
    if (target_scaled.height != height) {
      throw std::invalid_argument("disocclusion_mask: dims are not a uniform scaling of target");
    }
  }
  Image mask(width, height, 1, 0.0);
  const RigidTransform source_from_world = source.world_from_camera.inverse();
  constexpr double kDepthMargin = 1e-4;  // meters

  parallel_chunks(static_cast<std::size_t>(height), 8, [&](std::size_t y0, std::size_t y1) {
    std::vector<Hit> hits;
    for (std::size_t yy = y0; yy < y1; ++yy) {
      const int y = static_cast<int>(yy);
      for (int x = 0; x < width; ++x) {
        const PixelRay ray =
            pixel_ray(target_scaled, static_cast<double>(x), static_cast<double>(y));
        enumerate_hits(scene, ray.origin, ray.dir, hits);
        if (hits.empty()) continue;
        const Vec3 p_world = ray.origin + ray.dir * hits.front().t;
        const Vec3 p_src = source_from_world.apply(p_world);
        if (p_src.z <= 1e-9) {
          mask.at(x, y) = 1.0;
          continue;
        }
        const double xs = source.intrinsics.fx * p_src.x / p_src.z + source.intrinsics.cx;
        const double ys = source.intrinsics.fy * p_src.y / p_src.z + source.intrinsics.cy;
        if (xs < -0.5 || xs > source.width - 0.5 || ys < -0.5 || ys > source.height - 0.5) {
          mask.at(x, y) = 1.0;  // outside the source frame
          continue;
        }
        const PixelRay src_ray = pixel_ray(source, xs, ys);
        enumerate_hits(scene, src_ray.origin, src_ray.dir, hits);
        if (hits.empty() || hits.front().t < p_src.z - kDepthMargin) {
          mask.at(x, y) = 1.0;  // something nearer occludes it in the source
        }
      }
    }
  });
  return mask;
}

}  // namespace ldikit
