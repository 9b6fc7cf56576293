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

#include "ldikit/splat.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ldikit/parallel.hpp"

namespace ldikit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kProjectionChunk = 4096;

std::vector<int> selected_layers(const Ldi& ldi, int layer) {
  if (ldi.layers.empty()) throw std::invalid_argument("splat: LDI has no layers");
  if (layer == kAllLayers) {
    std::vector<int> all(static_cast<std::size_t>(ldi.layer_count()));
    for (int l = 0; l < ldi.layer_count(); ++l) all[static_cast<std::size_t>(l)] = l;
    return all;
  }
  if (layer < 0 || layer >= ldi.layer_count()) {
    throw std::invalid_argument("splat: layer index out of range");
  }
  return {layer};
}

void check_config(const SplatConfig& cfg) {
  if (!(cfg.tau > 0.0) || !(cfg.epsilon > 0.0)) {
    throw std::invalid_argument("splat: tau and epsilon must be positive");
  }
}

/// Projects every source pixel of the selected layers, in (layer, row, col)
/// order, into fixed slots. Safe to run chunked across threads.
std::vector<SplatRecord> project_sources(const Ldi& ldi, const std::vector<int>& layers,
                                         const ViewTransform& view, double tau) {
  const int w = ldi.width(), h = ldi.height();
  const std::size_t per_layer = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<SplatRecord> records(per_layer * layers.size());
  parallel_chunks(records.size(), kProjectionChunk, [&](std::size_t begin, std::size_t end) {
    std::size_t i = begin;
    int l_idx = static_cast<int>(begin / per_layer);
    std::size_t p = begin % per_layer;
    int y = static_cast<int>(p) / w;
    int x = static_cast<int>(p) % w;
    const double* disp =
        ldi.layers[static_cast<std::size_t>(layers[static_cast<std::size_t>(l_idx)])]
            .disparity.data()
            .data();
    while (i < end) {
      const ProjectedPoint pp =
          project(static_cast<double>(x), static_cast<double>(y), disp[p], view);
      SplatRecord& r = records[i];
      if (pp.valid) {
        r.x = snap_to_pixel_site(pp.x);
        r.y = snap_to_pixel_site(pp.y);
        r.exponent = pp.d / tau;
        r.valid = true;
      }
      ++i;
      ++x;
      ++p;
      if (x == w) {
        x = 0;
        ++y;
        if (y == h) {
          y = 0;
          p = 0;
          ++l_idx;
          if (i < end) {
            disp = ldi.layers[static_cast<std::size_t>(layers[static_cast<std::size_t>(l_idx)])]
                       .disparity.data()
                       .data();
          }
        }
      }
    }
  });
  return records;
}

double max_exponent_of(const std::vector<SplatRecord>& records) {
  double m = kNegInf;
  for (const SplatRecord& r : records) {
    if (r.valid && r.exponent > m) m = r.exponent;
  }
  return m;
}

SplatTensor make_tensor(const Ldi& ldi, const SplatConfig& cfg, int layer) {
  SplatTensor t;
  t.config = cfg;
  t.layer = layer;
  target_dims(ldi.width(), ldi.height(), cfg.target_downsampling, t.width, t.height);
  const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
  t.numerator.assign(3 * n, 0.0);
  t.denominator.assign(n, 0.0);
  t.offset.assign(n, kNegInf);
  return t;
}

/// Scatter of one record's 4 contributions against a shared exponent offset:
/// one exp per point, branch-free accumulators.
inline void scatter_uniform(SplatTensor& t, const SplatRecord& r, const double* color,
                            double scaled_weight) {
  const int x0 = static_cast<int>(std::floor(r.x));
  const int y0 = static_cast<int>(std::floor(r.y));
  const double fx = r.x - x0;
  const double fy = r.y - y0;
  const double bx[2] = {1.0 - fx, fx};
  const double by[2] = {1.0 - fy, fy};
  const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
  for (int ny = 0; ny < 2; ++ny) {
    const int yt = y0 + ny;
    if (yt < 0 || yt >= t.height || by[ny] == 0.0) continue;
    for (int nx = 0; nx < 2; ++nx) {
      const int xt = x0 + nx;
      if (xt < 0 || xt >= t.width || bx[nx] == 0.0) continue;
      const double s = scaled_weight * bx[nx] * by[ny];
      const std::size_t pt = t.pixel_index(xt, yt);
      t.denominator[pt] += s;
      t.numerator[pt] += color[0] * s;
      t.numerator[n + pt] += color[1] * s;
      t.numerator[2 * n + pt] += color[2] * s;
    }
  }
}

/// Scatter with per-pixel running-maximum offsets: the hard z-buffer regime
/// where exponents would overflow any shared scale.
inline void scatter_stabilized(SplatTensor& t, const SplatRecord& r, const double* color) {
  const int x0 = static_cast<int>(std::floor(r.x));
  const int y0 = static_cast<int>(std::floor(r.y));
  const double fx = r.x - x0;
  const double fy = r.y - y0;
  const double bx[2] = {1.0 - fx, fx};
  const double by[2] = {1.0 - fy, fy};
  const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
  for (int ny = 0; ny < 2; ++ny) {
    const int yt = y0 + ny;
    if (yt < 0 || yt >= t.height || by[ny] == 0.0) continue;
    for (int nx = 0; nx < 2; ++nx) {
      const int xt = x0 + nx;
      if (xt < 0 || xt >= t.width || bx[nx] == 0.0) continue;
      const double b = bx[nx] * by[ny];
      const std::size_t pt = t.pixel_index(xt, yt);
      double& m = t.offset[pt];
      if (r.exponent <= m) {
        const double s = std::exp(r.exponent - m) * b;
        t.denominator[pt] += s;
        t.numerator[pt] += color[0] * s;
        t.numerator[n + pt] += color[1] * s;
        t.numerator[2 * n + pt] += color[2] * s;
      } else {
        // New running maximum: rescale what is already accumulated.
        const double rescale = std::exp(m - r.exponent);
        t.denominator[pt] = t.denominator[pt] * rescale + b;
        t.numerator[pt] = t.numerator[pt] * rescale + color[0] * b;
        t.numerator[n + pt] = t.numerator[n + pt] * rescale + color[1] * b;
        t.numerator[2 * n + pt] = t.numerator[2 * n + pt] * rescale + color[2] * b;
        m = r.exponent;
      }
    }
  }
}

void finish_uniform(SplatTensor& t, double offset) {
  t.uniform_offset = true;
  t.offset_value = offset;
  for (std::size_t p = 0; p < t.denominator.size(); ++p) {
    if (t.denominator[p] > 0.0) t.offset[p] = offset;
  }
}

}  // namespace

void target_dims(int source_width, int source_height, double downsampling, int& out_width,
                 int& out_height) {
  if (!(downsampling > 0.0) || downsampling > 1.0) {
    throw std::invalid_argument("splat: target_downsampling must be in (0, 1]");
  }
  const double w = source_width * downsampling;
  const double h = source_height * downsampling;
  out_width = static_cast<int>(std::lround(w));
  out_height = static_cast<int>(std::lround(h));
  if (std::fabs(w - out_width) > 1e-9 || std::fabs(h - out_height) > 1e-9 || out_width < 1 ||
      out_height < 1) {
    throw std::invalid_argument("splat: downsampled target dimensions are not integral");
  }
}

ViewTransform splat_view(const ViewTransform& view, double downsampling) {
  ViewTransform scaled = view;
  scaled.target_intrinsics = scale_intrinsics(view.target_intrinsics, downsampling);
  return scaled;
}

SplatWeightParts splat_weight_parts(const ProjectedPoint& p, int x_t, int y_t, double tau) {
  if (!p.valid) return {0.0, 0.0};
  SplatWeightParts parts;
  parts.exponent = p.d / tau;
  parts.bilinear = bilinear_kernel(p.x, static_cast<double>(x_t)) *
                   bilinear_kernel(p.y, static_cast<double>(y_t));
  return parts;
}

double splat_weight(const ProjectedPoint& p, int x_t, int y_t, double tau) {
  const SplatWeightParts parts = splat_weight_parts(p, x_t, y_t, tau);
  if (parts.bilinear == 0.0) return 0.0;
  return std::exp(parts.exponent) * parts.bilinear;
}

SplatTensor splat_forward(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
                          int layer) {
  check_config(cfg);
  const std::vector<int> layers = selected_layers(ldi, layer);
  SplatTensor t = make_tensor(ldi, cfg, layer);

  const ViewTransform view_s = splat_view(view, cfg.target_downsampling);
  const std::vector<SplatRecord> records = project_sources(ldi, layers, view_s, cfg.tau);
  const double top = max_exponent_of(records);
  const bool uniform = top <= cfg.stabilization_threshold;

  // Serial scatter in record order; this fixed reduction order is what makes
  // renders bit-identical across thread counts.
  const std::size_t per_layer =
      static_cast<std::size_t>(ldi.width()) * static_cast<std::size_t>(ldi.height());
  std::size_t i = 0;
  for (int l : layers) {
    const double* tex = ldi.layers[static_cast<std::size_t>(l)].texture.data().data();
    for (std::size_t p = 0; p < per_layer; ++p, ++i) {
      const SplatRecord& r = records[i];
      if (!r.valid) continue;
      const double color[3] = {tex[p], tex[per_layer + p], tex[2 * per_layer + p]};
      if (uniform) {
        scatter_uniform(t, r, color, std::exp(r.exponent - top));
      } else {
        scatter_stabilized(t, r, color);
      }
    }
  }
  if (uniform) finish_uniform(t, top);
  return t;
}

MultiSplat splat_forward_all(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg) {
  check_config(cfg);
  const std::vector<int> layers = selected_layers(ldi, kAllLayers);
  MultiSplat out;
  out.composite = make_tensor(ldi, cfg, kAllLayers);
  for (int l : layers) out.per_layer.push_back(make_tensor(ldi, cfg, l));

  const ViewTransform view_s = splat_view(view, cfg.target_downsampling);
  out.records = project_sources(ldi, layers, view_s, cfg.tau);
  const double top = max_exponent_of(out.records);
  const bool uniform = top <= cfg.stabilization_threshold;

  const std::size_t per_layer =
      static_cast<std::size_t>(ldi.width()) * static_cast<std::size_t>(ldi.height());
  std::size_t i = 0;
  for (int l : layers) {
    const double* tex = ldi.layers[static_cast<std::size_t>(l)].texture.data().data();
    SplatTensor& single = out.per_layer[static_cast<std::size_t>(l)];
    for (std::size_t p = 0; p < per_layer; ++p, ++i) {
      const SplatRecord& r = out.records[i];
      if (!r.valid) continue;
      const double color[3] = {tex[p], tex[per_layer + p], tex[2 * per_layer + p]};
      if (uniform) {
        // Shared offset across the composite and every layer tensor: exponents
        // never exceed `top`, so nothing can overflow against it.
        const double s = std::exp(r.exponent - top);
        scatter_uniform(out.composite, r, color, s);
        scatter_uniform(single, r, color, s);
      } else {
        scatter_stabilized(out.composite, r, color);
        scatter_stabilized(single, r, color);
      }
    }
  }
  if (uniform) {
    finish_uniform(out.composite, top);
    for (SplatTensor& t : out.per_layer) finish_uniform(t, top);
  }
  return out;
}

Image SplatTensor::finalize() const {
  Image out(width, height, 3, config.white);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  for (std::size_t p = 0; p < n; ++p) {
    if (denominator[p] == 0.0) continue;  // nothing landed: exactly white
    // epsilon expressed in the offset space; underflows to 0 when the pixel is
    // heavily covered, which matches the true quotient's limit.
    const double eps_scaled = config.epsilon * std::exp(-offset[p]);
    const double inv = 1.0 / (denominator[p] + eps_scaled);
    for (int c = 0; c < 3; ++c) {
      out.data()[static_cast<std::size_t>(c) * n + p] =
          (numerator[static_cast<std::size_t>(c) * n + p] + config.white * eps_scaled) * inv;
    }
  }
  return out;
}

Image render(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg, int layer) {
  return splat_forward(ldi, view, cfg, layer).finalize();
}

namespace {

/// Gradient gather for one source point against one tensor. `rel` is the
/// point's weight in the tensor's offset space at this pixel; with uniform
/// offsets it is passed in, otherwise derived from the stored per-pixel
/// offset. Returns d(loss)/d(own disparity-exponent paths) accumulated via
/// the caller-side jacobian terms.
struct GatherResult {
  double g_tex[3] = {0.0, 0.0, 0.0};
  double g_x = 0.0;  // dL/dx through the kernel
  double g_y = 0.0;
  double g_e = 0.0;  // dL/d(exponent) through exp
};

inline void gather_one(const SplatTensor& t, const Image& rendered, const Image& upstream,
                       const SplatRecord& r, const double* color, double uniform_rel,
                       GatherResult& acc) {
  const int x0 = static_cast<int>(std::floor(r.x));
  const int y0 = static_cast<int>(std::floor(r.y));
  const double fx = r.x - x0;
  const double fy = r.y - y0;
  const double bx[2] = {1.0 - fx, fx};
  const double by[2] = {1.0 - fy, fy};
  // dB/dx for the (floor, floor+1) sites; 0 exactly at the kinks.
  const double dbx[2] = {fx > 0.0 ? -1.0 : 0.0, fx > 0.0 ? 1.0 : 0.0};
  const double dby[2] = {fy > 0.0 ? -1.0 : 0.0, fy > 0.0 ? 1.0 : 0.0};
  const std::size_t n = static_cast<std::size_t>(t.width) * t.height;

  for (int ny = 0; ny < 2; ++ny) {
    const int yt = y0 + ny;
    if (yt < 0 || yt >= t.height || by[ny] == 0.0) continue;
    for (int nx = 0; nx < 2; ++nx) {
      const int xt = x0 + nx;
      if (xt < 0 || xt >= t.width || bx[nx] == 0.0) continue;
      const std::size_t pt = t.pixel_index(xt, yt);
      const double m = t.offset[pt];
      const double eps_scaled = t.config.epsilon * std::exp(-m);
      const double inv_den = 1.0 / (t.denominator[pt] + eps_scaled);
      const double rel = t.uniform_offset ? uniform_rel : std::exp(r.exponent - m);

      double a = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double g = upstream.data()[static_cast<std::size_t>(ch) * n + pt];
        if (g == 0.0) continue;
        const double o = rendered.data()[static_cast<std::size_t>(ch) * n + pt];
        a += g * (color[ch] - o);
        acc.g_tex[ch] += g * rel * bx[nx] * by[ny] * inv_den;
      }
      a *= inv_den;
      acc.g_x += a * rel * dbx[nx] * by[ny];
      acc.g_y += a * rel * bx[nx] * dby[ny];
      acc.g_e += a * rel * bx[nx] * by[ny];
    }
  }
}

}  // namespace

void render_backward(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg, int layer,
                     const SplatTensor& forward, const Image& rendered, const Image& upstream,
                     LdiGrad& grad, double scale) {
  const std::vector<int> layers = selected_layers(ldi, layer);
  if (upstream.width() != forward.width || upstream.height() != forward.height ||
      upstream.channels() != 3 || !rendered.same_shape(upstream)) {
    throw std::invalid_argument("render_backward: upstream/rendered dimension mismatch");
  }
  if (grad.texture.size() != ldi.layers.size()) {
    throw std::invalid_argument("render_backward: gradient holder shape mismatch");
  }
  const int w = ldi.width(), h = ldi.height();
  const ViewTransform view_s = splat_view(view, cfg.target_downsampling);
  const std::size_t per_layer = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

  // Pure gather: each source pixel reads the finalized state of the <=4 target
  // pixels it touched and writes only its own gradient slots.
  parallel_chunks(per_layer * layers.size(), kProjectionChunk,
                  [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int l = layers[i / per_layer];
      const std::size_t p = i % per_layer;
      const int sy = static_cast<int>(p) / w;
      const int sx = static_cast<int>(p) % w;
      const Image& texture = ldi.layers[static_cast<std::size_t>(l)].texture;
      const double d = ldi.layers[static_cast<std::size_t>(l)].disparity.at(sx, sy);
      ProjectedPoint pp;
      ProjectionJacobian jac;
      if (!project_with_jacobian(static_cast<double>(sx), static_cast<double>(sy), d, view_s, pp,
                                 jac)) {
        continue;  // behind the camera: zero weight, zero gradient
      }
      SplatRecord r{snap_to_pixel_site(pp.x), snap_to_pixel_site(pp.y), pp.d / cfg.tau, true};
      const double color[3] = {texture.at(sx, sy, 0), texture.at(sx, sy, 1),
                               texture.at(sx, sy, 2)};
      const double uniform_rel =
          forward.uniform_offset ? std::exp(r.exponent - forward.offset_value) : 0.0;
      GatherResult acc;
      gather_one(forward, rendered, upstream, r, color, uniform_rel, acc);

      Image& gt = grad.texture[static_cast<std::size_t>(l)];
      Image& gd = grad.disparity[static_cast<std::size_t>(l)];
      for (int ch = 0; ch < 3; ++ch) gt.at(sx, sy, ch) += scale * acc.g_tex[ch];
      gd.at(sx, sy) +=
          scale * (acc.g_x * jac.dx_dd + acc.g_y * jac.dy_dd + acc.g_e * jac.dd_dd / cfg.tau);
    }
  });
}

void render_backward(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg, int layer,
                     const Image& upstream, LdiGrad& grad, double scale) {
  const SplatTensor forward = splat_forward(ldi, view, cfg, layer);
  const Image rendered = forward.finalize();
  render_backward(ldi, view, cfg, layer, forward, rendered, upstream, grad, scale);
}

void render_backward_all(const Ldi& ldi, const ViewTransform& view, const SplatConfig& cfg,
                         const MultiSplat& forward, const Image& composite_rendered,
                         const std::vector<Image>& layer_rendered,
                         const Image& composite_upstream,
                         const std::vector<Image>& layer_upstreams, LdiGrad& grad) {
  const int w = ldi.width(), h = ldi.height();
  const std::size_t per_layer = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const int L = ldi.layer_count();
  if (forward.records.size() != per_layer * static_cast<std::size_t>(L) ||
      layer_rendered.size() != static_cast<std::size_t>(L) ||
      layer_upstreams.size() != static_cast<std::size_t>(L)) {
    throw std::invalid_argument("render_backward_all: shape mismatch");
  }
  const ViewTransform view_s = splat_view(view, cfg.target_downsampling);

  parallel_chunks(forward.records.size(), kProjectionChunk,
                  [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SplatRecord& r = forward.records[i];
      if (!r.valid) continue;
      const int l = static_cast<int>(i / per_layer);
      const std::size_t p = i % per_layer;
      const int sy = static_cast<int>(p) / w;
      const int sx = static_cast<int>(p) % w;
      const Image& texture = ldi.layers[static_cast<std::size_t>(l)].texture;
      const double d = ldi.layers[static_cast<std::size_t>(l)].disparity.at(sx, sy);
      ProjectedPoint pp;
      ProjectionJacobian jac;
      if (!project_with_jacobian(static_cast<double>(sx), static_cast<double>(sy), d, view_s, pp,
                                 jac)) {
        continue;
      }
      const double color[3] = {texture.at(sx, sy, 0), texture.at(sx, sy, 1),
                               texture.at(sx, sy, 2)};
      const double uniform_rel = forward.composite.uniform_offset
                                     ? std::exp(r.exponent - forward.composite.offset_value)
                                     : 0.0;
      GatherResult acc;
      gather_one(forward.composite, composite_rendered, composite_upstream, r, color, uniform_rel,
                 acc);
      gather_one(forward.per_layer[static_cast<std::size_t>(l)],
                 layer_rendered[static_cast<std::size_t>(l)],
                 layer_upstreams[static_cast<std::size_t>(l)], r, color, uniform_rel, acc);

      Image& gt = grad.texture[static_cast<std::size_t>(l)];
      Image& gd = grad.disparity[static_cast<std::size_t>(l)];
      for (int ch = 0; ch < 3; ++ch) gt.at(sx, sy, ch) += acc.g_tex[ch];
      gd.at(sx, sy) += acc.g_x * jac.dx_dd + acc.g_y * jac.dy_dd + acc.g_e * jac.dd_dd / cfg.tau;
    }
  });
}

}  // namespace ldikit
