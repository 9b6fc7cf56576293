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

#include <vector>

#include "ldikit/image.hpp"
#include "ldikit/ldi.hpp"
#include "ldikit/splat.hpp"

namespace ldikit {

/// Term weights for the combined objective, plus the softmax temperature of
/// the source-consistency weighting. Every term except the ordering hinge is
/// a mean, so the weights are resolution-independent; the hinge is a raw sum
/// and reaches exactly zero on ordered inputs.
struct LossWeights {
  double vs = 1.0;
  double mvs = 1.0;
  double sc = 10.0;
  double inc = 1.0;
  double sm = 0.1;
  /// Temperature of the per-pixel layer softmax in the source-consistency
  /// loss. Defaults to the z-buffer temperature default (1/50).
  double tau_sc = 0.02;
};

/// Unweighted term values; total carries the weights.
struct LossBreakdown {
  double vs = 0.0;
  double mvs = 0.0;
  double sc = 0.0;
  double inc = 0.0;
  double sm = 0.0;
  double total = 0.0;
};

/// One multi-view supervision sample: an observed target image already at the
/// render (downsampled) resolution, and the source->target camera bundle at
/// full resolution.
struct ViewObservation {
  Image target;
  ViewTransform view;
};

/// Ordering hinge: sum over pixels and adjacent layer pairs of
/// max(0, D^{l+1} - D^l). Zero exactly when the LDI is ordering-clean.
double loss_inc(const Ldi& ldi);

/// Softmax over layers of disparity / tau_sc at one pixel, computed with
/// max-subtraction. Weights are positive and sum to 1.
std::vector<double> layer_weights(const std::vector<double>& disparities, double tau_sc);

/// Source-consistency: softmax-weighted (over layers) L1 between the source
/// image and each layer texture, as a mean over pixel-channels. Layers far
/// behind the front surface get vanishing weight, which is what lets occluded
/// texture deviate from the observed image.
double loss_sc(const Ldi& ldi, const Image& source, double tau_sc);

/// Masked view-synthesis L1: mean over masked target pixel-channels of
/// |target - render(ldi, all layers)|.
double loss_vs(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
               const Image& target, const Image& mask);

/// Min-view-synthesis: per masked target pixel, the smallest channel-summed L1
/// between the target and each single-layer render, normalized by masked
/// pixel-channels so that a 1-layer LDI gives exactly loss_vs.
double loss_mvs(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
                const Image& target, const Image& mask);

/// Disparity smoothness prior: mean absolute second difference, both axes,
/// over all layers and valid interior offsets. Requires width, height >= 3.
double loss_smooth(const Ldi& ldi);

/// Full objective. vs and mvs are averaged over views; sc/inc/sm act in the
/// source frame. total = vs*w_vs + mvs*w_mvs + sc*w_sc + inc*w_inc + sm*w_sm.
LossBreakdown loss_total(const Ldi& ldi, const Image& source,
                         const std::vector<ViewObservation>& views, const SplatConfig& cfg,
                         const Image& mask, const LossWeights& weights);

/// loss_total plus its exact reverse-mode gradient w.r.t. every texture and
/// disparity value, accumulated into `grad`. Subgradient conventions: 0 at
/// hinge ties and kernel kinks; the lowest-index layer wins min ties.
LossBreakdown losses_backward(const Ldi& ldi, const Image& source,
                              const std::vector<ViewObservation>& views, const SplatConfig& cfg,
                              const Image& mask, const LossWeights& weights, LdiGrad& grad);

}  // namespace ldikit
