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
#include "ldikit/scene.hpp"
#include "ldikit/splat.hpp"

namespace ldikit {

/// View-synthesis and inverse-depth metrics. vs errors are means of |pred -
/// gt| over pixel-channels, pooled across views; depth errors are means of
/// |D_pred - D_gt| on inverse depths. The background depth error is restricted
/// to pixels where the ground-truth layers actually differ.
struct EvalReport {
  double vs_error_all = 0.0;
  double vs_error_disocc = 0.0;
  /// False when no view had any dis-occluded pixel; vs_error_disocc is then
  /// meaningless and serialized as an empty field.
  bool disocc_defined = false;
  double fg_depth_error = 0.0;
  double bg_depth_error = 0.0;
};

/// Mean over masked pixel-channels of |pred - gt|. Throws on an empty mask.
double view_synthesis_error(const Image& pred, const Image& gt, const Image& mask);

/// Mean |pred_layer - gt_layer| disparity over the restriction mask. When the
/// prediction has fewer layers than requested (the 1-layer baseline scored on
/// the background), the deepest predicted layer substitutes.
double depth_error(const Ldi& pred, const Ldi& gt, int layer, const Image& restrict_mask);

/// Full protocol against a scene's exact ground truth: the prediction is
/// rendered at each target camera at the config's downsampling, compared with
/// ray-cast targets at that resolution, and scored over all pixels and over
/// the exact dis-occlusion mask; depth errors compare against the ground-truth
/// LDI at the source camera.
EvalReport evaluate_against_scene(const Ldi& pred, const Scene& scene, const Camera& source,
                                  const std::vector<Camera>& targets, const SplatConfig& cfg);

}  // namespace ldikit
