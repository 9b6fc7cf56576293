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

#include <string>
#include <vector>

#include "ldikit/image.hpp"

namespace ldikit {

/// One LDI layer: a 3-channel texture and a 1-channel disparity image of the
/// same dimensions. Disparity is inverse depth in 1/meters; larger is closer.
struct LdiLayer {
  Image texture;
  Image disparity;
};

/// Layered depth image. Layer 0 is the visible surface; deeper layers hold
/// occluded structure, so per pixel the disparities must be non-increasing
/// over layers. That ordering is a soft constraint during optimization and is
/// checked explicitly by validate().
struct Ldi {
  std::vector<LdiLayer> layers;
  double d_max = 1.0;

  int width() const { return layers.empty() ? 0 : layers.front().texture.width(); }
  int height() const { return layers.empty() ? 0 : layers.front().texture.height(); }
  int layer_count() const { return static_cast<int>(layers.size()); }

  /// Uniform LDI with the given constant texture value and per-layer disparity.
  static Ldi constant(int width, int height, const std::vector<double>& layer_disparities,
                      double texture_value = 0.5, double d_max = 1.0);
};

struct LdiViolation {
  enum class Kind { ordering, range, non_finite, shape };
  Kind kind;
  int layer;
  int x;
  int y;
  std::string message;
};

/// Every (pixel, layer) where the ordering or range invariants fail. Empty
/// result means the LDI is valid: consistent shapes, finite values, disparity
/// in (0, d_max], and D^l(p) >= D^{l+1}(p) everywhere.
std::vector<LdiViolation> validate(const Ldi& ldi);

/// As validate() but skipping the cross-layer ordering check; the fitter uses
/// this on intermediate iterates where ordering is only encouraged by loss.
std::vector<LdiViolation> validate_ranges(const Ldi& ldi);

/// Binary mask that zeroes a band around the image edges: a pixel is zero when
/// it lies within ceil(fraction * width) of the left/right edge or
/// ceil(fraction * height) of the top/bottom edge.
struct BoundaryMask {
  Image mask;
  double fraction = 0.0;
};

BoundaryMask make_boundary_mask(int width, int height, double fraction = 0.1);

/// Gradient holder with the same parameter layout as an Ldi: one 3-channel
/// texture gradient and one 1-channel disparity gradient per layer.
struct LdiGrad {
  std::vector<Image> texture;
  std::vector<Image> disparity;

  static LdiGrad zeros_like(const Ldi& ldi);
  void add_scaled(const LdiGrad& other, double scale);
};

}  // namespace ldikit
