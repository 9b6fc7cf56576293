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

#include "ldikit/geometry.hpp"
#include "ldikit/image.hpp"
#include "ldikit/ldi.hpp"

namespace ldikit {

/// Renders every layer of the LDI.
inline constexpr int kAllLayers = -1;

struct SplatConfig {
  /// Soft z-buffer temperature applied to target-frame inverse depth. Smaller
  /// values approach a hard z-buffer. Default is 1/50.
  double tau = 0.02;
  /// Quotient stabilizer; also biases uncovered pixels toward `white`.
  double epsilon = 1e-8;
  /// The rendered target grid is the source grid scaled by this factor, which
  /// must make both dimensions integral. Rendering below source resolution
  /// avoids cracks under content magnification.
  double target_downsampling = 0.5;
  /// Color an uncovered pixel converges to, per channel.
  double white = 1.0;
  /// Largest d/tau exponent accumulated against a single shared offset; above
  /// it, accumulation switches to per-pixel running-maximum stabilization (the
  /// hard z-buffer regime where raw weights overflow). The rendered quotient
  /// is invariant to the choice; tests pin it low to exercise both paths.
  double stabilization_threshold = 600.0;
};

/// Tent kernel max(0, 1 - |a - b|): the bilinear interpolation weight between
/// a continuous landing coordinate and an integer pixel site. The subgradient
/// at the kinks |a - b| in {0, 1} is 0 by convention.
inline double bilinear_kernel(double a, double b) {
  return std::max(0.0, 1.0 - std::fabs(a - b));
}

/// Landing coordinates within 1e-9 px of an integer site snap onto it. A
/// round-tripped identity projection lands 1 ulp off its own pixel; the
/// resulting ~1e-16 kernel tail on the neighbor gets multiplied by the
/// exponential z-weight ratio, which at hard temperatures reaches e^400+ and
/// lets depth edges bleed across exact landings. Sub-roundoff offsets carry
/// no geometry; the snap plateau matches the kernel's 0-subgradient at kinks.
inline double snap_to_pixel_site(double v) {
  const double r = std::nearbyint(v);
  return std::fabs(v - r) < 1e-9 ? r : v;
}

/// splat_weight factored as exp(exponent) * bilinear so accumulation can run
/// with an exponent offset instead of raw exponentials.
struct SplatWeightParts {
  double exponent = 0.0;  // d / tau
  double bilinear = 0.0;  // B(x, x_t) * B(y, y_t)
};

SplatWeightParts splat_weight_parts(const ProjectedPoint& p, int x_t, int y_t, double tau);

/// w = exp(d/tau) * B(x, x_t) * B(y, y_t). Invalid points weigh 0. May
/// overflow to inf for extreme d/tau; the renderer itself always accumulates
/// in offset space.
double splat_weight(const ProjectedPoint& p, int x_t, int y_t, double tau);

/// One projected source point, in (layer, row, column) order over the
/// selected layers. splat_forward_all keeps these so its backward pass
/// replays contributions without re-projecting; the single-tensor path
/// recomputes them instead, deterministically.
struct SplatRecord {
  double x = 0.0;
  double y = 0.0;
  double exponent = 0.0;  // d / tau
  bool valid = false;
};

/// Soft z-buffered accumulation buffers over the target grid.
///
/// Stored sums are scaled: the true weighted-color and weight sums at pixel p
/// are numerator(p) * exp(offset(p)) and denominator(p) * exp(offset(p)).
/// The offset plane is a single shared value when the exponent range allows
/// it and a per-pixel running maximum otherwise; the rendered color is
/// invariant to that shared offset either way.
struct SplatTensor {
  int width = 0;
  int height = 0;
  std::vector<double> numerator;    // 3 planes, channel-major row-major
  std::vector<double> denominator;  // 1 plane, >= 0 everywhere
  std::vector<double> offset;       // 1 plane, -inf where nothing landed
  bool uniform_offset = false;      // all touched pixels share offset_value
  double offset_value = 0.0;
  SplatConfig config;
  int layer = kAllLayers;

  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }

  /// (sum I w + eps * white) / (sum w + eps) per channel; pixels nothing
  /// landed on come out exactly white.
  Image finalize() const;
};

/// Forward splats of one view shared across the composite render and every
/// single-layer render: one projection pass, one record array.
struct MultiSplat {
  std::vector<SplatRecord> records;  // (layer, row, column) order, all layers
  SplatTensor composite;
  std::vector<SplatTensor> per_layer;
};

/// Forward-splats the selected layer(s) of the LDI onto the target grid.
///
/// Every source pixel of every selected layer is projected with its disparity
/// and scatters onto its 4 neighboring target pixels with weight
/// exp(d/tau) * B(.) * B(.). Projection runs in parallel over fixed chunks;
/// the accumulation sweep is a single pass in (layer, row, column) order, so
/// results are bit-identical for any thread count.
SplatTensor splat_forward(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
                          int layer = kAllLayers);

/// splat_forward + finalize.
Image render(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
             int layer = kAllLayers);

/// Composite and all single-layer tensors from a single projection pass.
MultiSplat splat_forward_all(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg);

/// Exact reverse-mode derivative of render() w.r.t. every selected layer's
/// texture and disparity values, accumulated into `grad` (scaled by `scale`).
///
/// `forward` and `rendered` must come from splat_forward/finalize on identical
/// inputs. Gradients flow through the quotient, the exp(d/tau) factor, and
/// both kernel factors via the projection Jacobian; kernel kinks use the
/// 0-subgradient convention of bilinear_kernel.
void render_backward(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg, int layer,
                     const SplatTensor& forward, const Image& rendered, const Image& upstream,
                     LdiGrad& grad, double scale = 1.0);

/// Convenience overload that redoes the forward pass internally.
void render_backward(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg, int layer,
                     const Image& upstream, LdiGrad& grad, double scale = 1.0);

/// One-sweep backward through a MultiSplat: for each source point, gathers the
/// composite upstream and its own layer's upstream together. Any upstream may
/// be empty (skipped). Gradients accumulate into `grad`.
void render_backward_all(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
                         const MultiSplat& forward, const Image& composite_rendered,
                         const std::vector<Image>& layer_rendered,
                         const Image& composite_upstream,
                         const std::vector<Image>& layer_upstreams, LdiGrad& grad);

/// Target grid dimensions implied by the source dimensions and the config's
/// downsampling factor. Throws if either scaled dimension is not integral.
void target_dims(int source_width, int source_height, double downsampling, int& out_width,
                 int& out_height);

/// The view transform actually used for splatting: source intrinsics as given,
/// target intrinsics rescaled onto the downsampled render grid.
ViewTransform splat_view(const ViewTransform& view, double downsampling);

}  // namespace ldikit
