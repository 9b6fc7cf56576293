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

#include "ldikit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ldikit {

namespace {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::size_t masked_pixel_count(const Image& mask) {
  std::size_t n = 0;
  for (double v : mask.data()) {
    if (v != 0.0) ++n;
  }
  return n;
}

void check_view_shapes(const Ldi& ldi, const SplatConfig& cfg, const Image& target,
                       const Image& mask) {
  int tw = 0, th = 0;
  target_dims(ldi.width(), ldi.height(), cfg.target_downsampling, tw, th);
  if (target.width() != tw || target.height() != th || target.channels() != 3) {
    throw std::invalid_argument("losses: target image does not match the render grid");
  }
  if (mask.width() != tw || mask.height() != th || mask.channels() != 1) {
    throw std::invalid_argument("losses: mask does not match the render grid");
  }
}

/// Softmax over `count` disparities into `out`, max-subtracted.
void layer_weights_at(const double* disparities, int count, double tau_sc, double* out) {
  double m = disparities[0];
  for (int l = 1; l < count; ++l) m = std::max(m, disparities[l]);
  double sum = 0.0;
  for (int l = 0; l < count; ++l) {
    out[l] = std::exp((disparities[l] - m) / tau_sc);
    sum += out[l];
  }
  for (int l = 0; l < count; ++l) out[l] /= sum;
}

constexpr int kMaxLayers = 8;

/// Shared implementation: every term's forward value, and when grad != nullptr
/// also the weighted gradient of the total. Keeping forward-only and
/// forward+backward on one code path makes their values bit-identical.
LossBreakdown evaluate(const Ldi& ldi, const Image& source,
                       const std::vector<ViewObservation>& views, const SplatConfig& cfg,
                       const Image& mask, const LossWeights& weights, LdiGrad* grad) {
  if (ldi.layers.empty()) throw std::invalid_argument("losses: LDI has no layers");
  if (views.empty()) throw std::invalid_argument("losses: at least one view is required");
  if (source.width() != ldi.width() || source.height() != ldi.height() ||
      source.channels() != 3) {
    throw std::invalid_argument("losses: source image does not match the LDI grid");
  }
  const int L = ldi.layer_count();
  if (L > kMaxLayers) throw std::invalid_argument("losses: too many layers");
  const int w = ldi.width(), h = ldi.height();
  if (!(weights.tau_sc > 0.0)) throw std::invalid_argument("losses: tau_sc must be positive");

  LossBreakdown bd;

  // Ordering hinge (sum over pixels and adjacent pairs).
  for (int l = 0; l + 1 < L; ++l) {
    const Image& near_d = ldi.layers[static_cast<std::size_t>(l)].disparity;
    const Image& far_d = ldi.layers[static_cast<std::size_t>(l) + 1].disparity;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double gap = far_d.at(x, y) - near_d.at(x, y);
        if (gap > 0.0) {
          bd.inc += gap;
          if (grad) {
            grad->disparity[static_cast<std::size_t>(l) + 1].at(x, y) += weights.inc;
            grad->disparity[static_cast<std::size_t>(l)].at(x, y) -= weights.inc;
          }
        }
      }
    }
  }

  // Source consistency: softmax-weighted over layers, mean over pixel-channels
  // (so its weight is resolution-independent, like the view losses).
  {
    const double sc_norm = 1.0 / (3.0 * static_cast<double>(w) * h);
    double disp[kMaxLayers], lw[kMaxLayers], l1[kMaxLayers];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int l = 0; l < L; ++l) {
          disp[l] = ldi.layers[static_cast<std::size_t>(l)].disparity.at(x, y);
        }
        layer_weights_at(disp, L, weights.tau_sc, lw);
        double weighted = 0.0;
        for (int l = 0; l < L; ++l) {
          const Image& tex = ldi.layers[static_cast<std::size_t>(l)].texture;
          double a = 0.0;
          for (int c = 0; c < 3; ++c) a += std::fabs(tex.at(x, y, c) - source.at(x, y, c));
          l1[l] = a;
          weighted += lw[l] * a;
        }
        bd.sc += weighted;
        if (grad) {
          for (int l = 0; l < L; ++l) {
            const Image& tex = ldi.layers[static_cast<std::size_t>(l)].texture;
            Image& gt = grad->texture[static_cast<std::size_t>(l)];
            for (int c = 0; c < 3; ++c) {
              gt.at(x, y, c) += weights.sc * sc_norm * lw[l] *
                                sign(tex.at(x, y, c) - source.at(x, y, c));
            }
            // Softmax path: dw_j/dD_l = w_j (delta_jl - w_l) / tau.
            grad->disparity[static_cast<std::size_t>(l)].at(x, y) +=
                weights.sc * sc_norm * lw[l] / weights.tau_sc * (l1[l] - weighted);
          }
        }
      }
    }
    bd.sc *= sc_norm;
  }

  // Smoothness (mean absolute second difference over layers and both axes).
  {
    if (w < 3 || h < 3) throw std::invalid_argument("losses: image too small for smoothness");
    const double denom = static_cast<double>(L) * (static_cast<double>(h) * (w - 2) +
                                                   static_cast<double>(w) * (h - 2));
    double sum = 0.0;
    for (int l = 0; l < L; ++l) {
      const Image& d = ldi.layers[static_cast<std::size_t>(l)].disparity;
      Image* gd = grad ? &grad->disparity[static_cast<std::size_t>(l)] : nullptr;
      for (int y = 0; y < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
          const double s = d.at(x - 1, y) - 2.0 * d.at(x, y) + d.at(x + 1, y);
          sum += std::fabs(s);
          if (gd) {
            const double g = weights.sm * sign(s) / denom;
            gd->at(x - 1, y) += g;
            gd->at(x, y) -= 2.0 * g;
            gd->at(x + 1, y) += g;
          }
        }
      }
      for (int x = 0; x < w; ++x) {
        for (int y = 1; y + 1 < h; ++y) {
          const double s = d.at(x, y - 1) - 2.0 * d.at(x, y) + d.at(x, y + 1);
          sum += std::fabs(s);
          if (gd) {
            const double g = weights.sm * sign(s) / denom;
            gd->at(x, y - 1) += g;
            gd->at(x, y) -= 2.0 * g;
            gd->at(x, y + 1) += g;
          }
        }
      }
    }
    bd.sm = sum / denom;
  }

  // View losses, averaged over views. One projection pass serves the
  // composite and every single-layer render of a view.
  {
    const double n_views = static_cast<double>(views.size());
    for (const ViewObservation& obs : views) {
      check_view_shapes(ldi, cfg, obs.target, mask);
      const std::size_t n_masked = masked_pixel_count(mask);
      if (n_masked == 0) throw std::invalid_argument("losses: mask selects no pixels");
      const double norm = 1.0 / (3.0 * static_cast<double>(n_masked));
      const int tw = obs.target.width(), th = obs.target.height();

      const MultiSplat multi = splat_forward_all(ldi, obs.view, cfg);
      const Image img = multi.composite.finalize();
      std::vector<Image> layer_imgs;
      layer_imgs.reserve(static_cast<std::size_t>(L));
      for (int l = 0; l < L; ++l) {
        layer_imgs.push_back(multi.per_layer[static_cast<std::size_t>(l)].finalize());
      }

      double vs_sum = 0.0;
      Image upstream(tw, th, 3, 0.0);
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          if (mask.at(x, y) == 0.0) continue;
          for (int c = 0; c < 3; ++c) {
            const double diff = img.at(x, y, c) - obs.target.at(x, y, c);
            vs_sum += std::fabs(diff);
            if (grad) upstream.at(x, y, c) = weights.vs / n_views * norm * sign(diff);
          }
        }
      }
      bd.vs += vs_sum * norm / n_views;

      std::vector<Image> layer_upstreams;
      if (grad) layer_upstreams.assign(static_cast<std::size_t>(L), Image(tw, th, 3, 0.0));
      double mvs_sum = 0.0;
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          if (mask.at(x, y) == 0.0) continue;
          int best = 0;
          double best_l1 = 0.0;
          for (int l = 0; l < L; ++l) {
            double a = 0.0;
            for (int c = 0; c < 3; ++c) {
              a += std::fabs(layer_imgs[static_cast<std::size_t>(l)].at(x, y, c) -
                             obs.target.at(x, y, c));
            }
            if (l == 0 || a < best_l1) {  // ties stay with the lowest index
              best = l;
              best_l1 = a;
            }
          }
          mvs_sum += best_l1;
          if (grad) {
            Image& up = layer_upstreams[static_cast<std::size_t>(best)];
            for (int c = 0; c < 3; ++c) {
              const double diff =
                  layer_imgs[static_cast<std::size_t>(best)].at(x, y, c) - obs.target.at(x, y, c);
              up.at(x, y, c) = weights.mvs / n_views * norm * sign(diff);
            }
          }
        }
      }
      bd.mvs += mvs_sum * norm / n_views;

      if (grad) {
        render_backward_all(ldi, obs.view, cfg, multi, img, layer_imgs, upstream,
                            layer_upstreams, *grad);
      }
    }
  }

  bd.total = weights.vs * bd.vs + weights.mvs * bd.mvs + weights.sc * bd.sc +
             weights.inc * bd.inc + weights.sm * bd.sm;
  return bd;
}

}  // namespace

double loss_inc(const Ldi& ldi) {
  if (ldi.layers.empty()) throw std::invalid_argument("loss_inc: LDI has no layers");
  double sum = 0.0;
  for (int l = 0; l + 1 < ldi.layer_count(); ++l) {
    const Image& near_d = ldi.layers[static_cast<std::size_t>(l)].disparity;
    const Image& far_d = ldi.layers[static_cast<std::size_t>(l) + 1].disparity;
    for (std::size_t i = 0; i < near_d.size(); ++i) {
      sum += std::max(0.0, far_d.data()[i] - near_d.data()[i]);
    }
  }
  return sum;
}

std::vector<double> layer_weights(const std::vector<double>& disparities, double tau_sc) {
  if (disparities.empty()) throw std::invalid_argument("layer_weights: no layers");
  if (!(tau_sc > 0.0)) throw std::invalid_argument("layer_weights: tau_sc must be positive");
  std::vector<double> out(disparities.size());
  layer_weights_at(disparities.data(), static_cast<int>(disparities.size()), tau_sc, out.data());
  return out;
}

double loss_sc(const Ldi& ldi, const Image& source, double tau_sc) {
  if (ldi.layers.empty()) throw std::invalid_argument("loss_sc: LDI has no layers");
  if (source.width() != ldi.width() || source.height() != ldi.height() ||
      source.channels() != 3) {
    throw std::invalid_argument("loss_sc: source image does not match the LDI grid");
  }
  const int L = ldi.layer_count();
  if (L > kMaxLayers) throw std::invalid_argument("loss_sc: too many layers");
  double disp[kMaxLayers], lw[kMaxLayers];
  double sum = 0.0;
  for (int y = 0; y < ldi.height(); ++y) {
    for (int x = 0; x < ldi.width(); ++x) {
      for (int l = 0; l < L; ++l) {
        disp[l] = ldi.layers[static_cast<std::size_t>(l)].disparity.at(x, y);
      }
      layer_weights_at(disp, L, tau_sc, lw);
      for (int l = 0; l < L; ++l) {
        const Image& tex = ldi.layers[static_cast<std::size_t>(l)].texture;
        double a = 0.0;
        for (int c = 0; c < 3; ++c) a += std::fabs(tex.at(x, y, c) - source.at(x, y, c));
        sum += lw[l] * a;
      }
    }
  }
  return sum / (3.0 * static_cast<double>(ldi.width()) * ldi.height());
}

double loss_vs(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
               const Image& target, const Image& mask) {
  check_view_shapes(ldi, cfg, target, mask);
  const Image img = render(ldi, view, cfg, kAllLayers);
  return masked_mean_abs_difference(img, target, mask);
}

double loss_mvs(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
                const Image& target, const Image& mask) {
  check_view_shapes(ldi, cfg, target, mask);
  const int L = ldi.layer_count();
  std::vector<Image> layer_imgs;
  layer_imgs.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) layer_imgs.push_back(render(ldi, view, cfg, l));
  const std::size_t n_masked = masked_pixel_count(mask);
  if (n_masked == 0) throw std::invalid_argument("loss_mvs: mask selects no pixels");
  double sum = 0.0;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (mask.at(x, y) == 0.0) continue;
      double best = 0.0;
      for (int l = 0; l < L; ++l) {
        double a = 0.0;
        for (int c = 0; c < 3; ++c) {
          a += std::fabs(layer_imgs[static_cast<std::size_t>(l)].at(x, y, c) - target.at(x, y, c));
        }
        if (l == 0 || a < best) best = a;
      }
      sum += best;
    }
  }
  return sum / (3.0 * static_cast<double>(n_masked));
}

double loss_smooth(const Ldi& ldi) {
  if (ldi.layers.empty()) throw std::invalid_argument("loss_smooth: LDI has no layers");
  const int w = ldi.width(), h = ldi.height();
  if (w < 3 || h < 3) throw std::invalid_argument("loss_smooth: image too small");
  const int L = ldi.layer_count();
  const double denom = static_cast<double>(L) * (static_cast<double>(h) * (w - 2) +
                                                 static_cast<double>(w) * (h - 2));
  double sum = 0.0;
  for (int l = 0; l < L; ++l) {
    const Image& d = ldi.layers[static_cast<std::size_t>(l)].disparity;
    for (int y = 0; y < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        sum += std::fabs(d.at(x - 1, y) - 2.0 * d.at(x, y) + d.at(x + 1, y));
      }
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 1; y + 1 < h; ++y) {
        sum += std::fabs(d.at(x, y - 1) - 2.0 * d.at(x, y) + d.at(x, y + 1));
      }
    }
  }
  return sum / denom;
}

LossBreakdown loss_total(const Ldi& ldi, const Image& source,
                         const std::vector<ViewObservation>& views, const SplatConfig& cfg,
                         const Image& mask, const LossWeights& weights) {
  return evaluate(ldi, source, views, cfg, mask, weights, nullptr);
}

LossBreakdown losses_backward(const Ldi& ldi, const Image& source,
                              const std::vector<ViewObservation>& views, const SplatConfig& cfg,
                              const Image& mask, const LossWeights& weights, LdiGrad& grad) {
  if (grad.texture.size() != ldi.layers.size() || grad.disparity.size() != ldi.layers.size()) {
    throw std::invalid_argument("losses_backward: gradient holder shape mismatch");
  }
  return evaluate(ldi, source, views, cfg, mask, weights, &grad);
}

}  // namespace ldikit
