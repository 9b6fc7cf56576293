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
#include <cstdint>
#include <vector>

#include "ldikit/geometry.hpp"
#include "ldikit/image.hpp"
#include "ldikit/ldi.hpp"
#include "ldikit/rng.hpp"

namespace ldikit {

/// Procedural texture: a two-color gradient plus band-limited multi-octave
/// value noise and an optional sinusoidal stripe pattern, evaluated at
/// continuous (u, v) in [0,1]^2. Fully described by its parameters, so scenes
/// serialize exactly.
struct TextureParams {
  std::array<double, 3> color_a{0.5, 0.5, 0.5};
  std::array<double, 3> color_b{0.5, 0.5, 0.5};
  std::array<double, 2> gradient_dir{1.0, 0.0};
  std::uint64_t noise_seed = 0;
  double noise_amp = 0.2;
  double noise_freq = 4.0;
  int octaves = 3;
  double stripe_amp = 0.0;
  double stripe_freq = 6.0;
  double stripe_phase = 0.0;
  std::array<double, 2> stripe_dir{1.0, 0.0};

  std::array<double, 3> sample(double u, double v) const;
  static TextureParams random(Rng& rng);
};

/// World coordinates: x right, y down, z forward. The canonical camera sits at
/// the origin looking along +z; the floor is the y = +1 plane.
struct RoomPlane {
  Vec3 origin;  // corner at (u, v) = (0, 0)
  Vec3 edge_u;  // full extent along u
  Vec3 edge_v;  // full extent along v
  TextureParams texture;
};

/// Front-facing textured rectangle standing on the floor at depth z, with a
/// per-texel binary opacity mask cut from a smooth polar blob.
struct SpritePlane {
  double z = 2.0;
  double center_x = 0.0;
  double width = 0.6;
  double height = 0.9;
  TextureParams texture;

  int mask_resolution = 96;
  double blob_radius = 0.42;
  std::array<double, 2> blob_center{0.5, 0.6};
  std::array<double, 4> blob_amp{};    // harmonics k = 2..5
  std::array<double, 4> blob_phase{};  // matching phases

  /// Nearest-texel opacity lookup in sprite-local (u, v).
  bool opaque_at(double u, double v) const;
  /// Continuous blob membership the texel grid is cut from.
  bool blob_contains(double u, double v) const;
};

/// Room box spanning x,y in [-1,1], z in [1,3] with five textured faces (the
/// front face is open), plus 1-3 sprites at strictly increasing depths from
/// left to right.
struct Scene {
  std::array<RoomPlane, 5> room;  // left, right, back, ceiling, floor
  std::vector<SpritePlane> sprites;
  double d_max = 1.0;
  std::uint64_t rng_seed = 0;

  static constexpr double kRoomNearZ = 1.0;
  static constexpr double kRoomFarZ = 3.0;
};

/// A posed pinhole camera with its pixel grid size.
struct Camera {
  Intrinsics intrinsics;
  RigidTransform world_from_camera;
  int width = 0;
  int height = 0;
};

/// Canonical front-facing view: identity pose, fx = fy = 1.2 * width (narrow
/// enough that sampled cameras never see past the open room front), principal
/// point at the grid center.
Camera canonical_camera(int width, int height);

/// Camera with intrinsics and grid rescaled by `factor`.
Camera scale_camera(const Camera& camera, double factor);

/// Source->target bundle from two posed cameras.
ViewTransform make_view_transform(const Camera& source, const Camera& target);

/// Default ranges balance two measured targets: sampled views dis-occlude
/// ~10% of target pixels on average, while the ground-truth LDI still
/// splat-renders to any sampled view within the consistency bound (the junk
/// band of content outside the source frustum must stay inside the boundary
/// mask).
struct ViewSampleRanges {
  double max_lateral = 0.15;   // meters, x
  double max_vertical = 0.15;  // meters, y
  double max_axial = 0.1;      // meters, z
  double max_rotation_deg = 3.0;
};

/// A sampled source/target camera pair; one of the two is the canonical view.
struct ViewPairSample {
  Camera source;
  Camera target;
  ViewTransform relative;
  bool canonical_is_source = true;
};

ViewPairSample sample_view_pair(std::uint64_t seed, const ViewSampleRanges& ranges,
                                const Camera& canonical);

/// A perturbed camera only (always starting from the canonical pose); bundle
/// generation keeps the source canonical and samples N of these as targets.
Camera sample_perturbed_camera(Rng& rng, const ViewSampleRanges& ranges, const Camera& canonical);

Scene generate_scene(std::uint64_t seed, int n_obj_min = 1, int n_obj_max = 3);

/// Exact nearest-hit rendering: color and disparity (1/depth along the camera
/// axis) of the first opaque surface per pixel. Throws if any ray escapes the
/// room, which the generator's construction is meant to make impossible.
struct RaycastResult {
  Image color;
  Image disparity;
};
RaycastResult raycast(const Scene& scene, const Camera& camera, int width, int height);

/// Two-layer ground truth: layer 0 is the first opaque hit, layer 1 the next
/// surface behind it along the same ray. Rays with a single surface repeat
/// layer 0 in layer 1; second_surface marks where layer 1 is real.
struct GroundTruthLdi {
  Ldi ldi;
  Image second_surface;  // 1 where a distinct second surface exists
};
GroundTruthLdi ground_truth_ldi(const Scene& scene, const Camera& camera, int width, int height,
                                int layers = 2);

/// Binary target-frame mask of pixels whose surface is hidden (or out of
/// frame) in the source view, decided by exact geometry: the target pixel's
/// first hit is re-projected into the source camera and compared against the
/// source's own first hit along that ray, with a 1e-4 m depth margin.
Image disocclusion_mask(const Scene& scene, const Camera& source, const Camera& target, int width,
                        int height);

}  // namespace ldikit
