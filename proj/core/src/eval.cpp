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

#include "ldikit/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace ldikit {

double view_synthesis_error(const Image& pred, const Image& gt, const Image& mask) {
  return masked_mean_abs_difference(pred, gt, mask);
}

double depth_error(const Ldi& pred, const Ldi& gt, int layer, const Image& restrict_mask) {
  if (layer < 0 || layer >= gt.layer_count()) {
    throw std::invalid_argument("depth_error: layer out of range for ground truth");
  }
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw std::invalid_argument("depth_error: prediction/ground-truth dims mismatch");
  }
  // Substitution protocol: a prediction without this layer is scored with its
  // deepest available layer.
  const int pred_layer = std::min(layer, pred.layer_count() - 1);
  const Image& dp = pred.layers[static_cast<std::size_t>(pred_layer)].disparity;
  const Image& dg = gt.layers[static_cast<std::size_t>(layer)].disparity;
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < dg.height(); ++y) {
    for (int x = 0; x < dg.width(); ++x) {
      if (restrict_mask.at(x, y) == 0.0) continue;
      sum += std::fabs(dp.at(x, y) - dg.at(x, y));
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("depth_error: empty restriction mask");
  return sum / static_cast<double>(count);
}

EvalReport evaluate_against_scene(const Ldi& pred, const Scene& scene, const Camera& source,
                                  const std::vector<Camera>& targets, const SplatConfig& cfg) {
  if (targets.empty()) throw std::invalid_argument("evaluate_against_scene: no target views");
  if (pred.width() != source.width || pred.height() != source.height) {
    throw std::invalid_argument("evaluate_against_scene: prediction does not match source grid");
  }
  EvalReport report;

  double all_sum = 0.0, disocc_sum = 0.0;
  std::size_t all_count = 0, disocc_count = 0;
  for (const Camera& target : targets) {
    const ViewTransform view = make_view_transform(source, target);
    const Image rendered = render(pred, view, cfg, kAllLayers);
    const Camera target_small = scale_camera(target, cfg.target_downsampling);
    const RaycastResult gt = raycast(scene, target_small, rendered.width(), rendered.height());
    const Image disocc =
        disocclusion_mask(scene, source, target_small, rendered.width(), rendered.height());
    for (int y = 0; y < rendered.height(); ++y) {
      for (int x = 0; x < rendered.width(); ++x) {
        for (int c = 0; c < 3; ++c) {
          const double diff = std::fabs(rendered.at(x, y, c) - gt.color.at(x, y, c));
          all_sum += diff;
          ++all_count;
          if (disocc.at(x, y) != 0.0) {
            disocc_sum += diff;
            ++disocc_count;
          }
        }
      }
    }
  }
  report.vs_error_all = all_sum / static_cast<double>(all_count);
  report.disocc_defined = disocc_count > 0;
  report.vs_error_disocc =
      report.disocc_defined ? disocc_sum / static_cast<double>(disocc_count) : 0.0;

  const GroundTruthLdi gt = ground_truth_ldi(scene, source, pred.width(), pred.height());
  const Image all_mask(pred.width(), pred.height(), 1, 1.0);
  report.fg_depth_error = depth_error(pred, gt.ldi, 0, all_mask);
  report.bg_depth_error = depth_error(pred, gt.ldi, 1, gt.second_surface);
  return report;
}

}  // namespace ldikit
