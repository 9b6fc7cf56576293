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

#include "ldikit/gradcheck.hpp"

#include <cmath>

namespace ldikit {

namespace {

constexpr double kPi = 3.14159265358979323846;

void prefix_blocks(GradReport& report, const std::string& prefix) {
  for (GradReport::Block& b : report.blocks) b.name = prefix + "/" + b.name;
}

/// Projection footprint of the point a probe perturbs: the <=4 target pixels
/// it splats onto, plus the projection Jacobian for sensitivity bounds.
struct Footprint {
  bool valid = false;
  int x0 = 0, y0 = 0;  // floor of the landing point; neighbors are +1
  ProjectedPoint point;
  ProjectionJacobian jac;
};

Footprint probe_footprint(const Ldi& ldi, const ParamRef& ref, const ViewTransform& scaled_view) {
  Footprint fp;
  const double d = ldi.layers[static_cast<std::size_t>(ref.layer)].disparity.at(ref.x, ref.y);
  fp.point = project(static_cast<double>(ref.x), static_cast<double>(ref.y), d, scaled_view);
  if (!fp.point.valid) return fp;
  fp.jac = project_gradient(static_cast<double>(ref.x), static_cast<double>(ref.y), d, scaled_view);
  fp.x0 = static_cast<int>(std::floor(fp.point.x));
  fp.y0 = static_cast<int>(std::floor(fp.point.y));
  fp.valid = true;
  return fp;
}

double distance_to_integer(double v) {
  const double f = v - std::floor(v);
  return std::min(f, 1.0 - f);
}

/// How much a rendered pixel value can move during an FD probe of this
/// parameter, used to widen tie margins. Deliberately loose upper bound.
double render_sensitivity(const Footprint& fp, const ParamRef& ref, double tau) {
  if (ref.block == ParamRef::Block::texture) return 1.0;
  return std::fabs(fp.jac.dx_dd) + std::fabs(fp.jac.dy_dd) + std::fabs(fp.jac.dd_dd) / tau + 1.0;
}

/// Everything the loss filters need, computed once per instance.
struct RenderedState {
  ViewTransform scaled_view;
  Image composite;
  std::vector<Image> layer_imgs;
  // Per target pixel: channel-summed L1 against the target, per layer.
  std::vector<std::vector<double>> layer_l1;
  int tw = 0, th = 0;

  static RenderedState make(const GradcheckInstance& inst) {
    RenderedState st;
    st.scaled_view = splat_view(inst.view, inst.splat.target_downsampling);
    st.composite = render(inst.ldi, inst.view, inst.splat, kAllLayers);
    st.tw = st.composite.width();
    st.th = st.composite.height();
    for (int l = 0; l < inst.ldi.layer_count(); ++l) {
      st.layer_imgs.push_back(render(inst.ldi, inst.view, inst.splat, l));
    }
    st.layer_l1.assign(st.layer_imgs.size(),
                       std::vector<double>(static_cast<std::size_t>(st.tw) * st.th, 0.0));
    for (std::size_t l = 0; l < st.layer_imgs.size(); ++l) {
      for (int y = 0; y < st.th; ++y) {
        for (int x = 0; x < st.tw; ++x) {
          double a = 0.0;
          for (int c = 0; c < 3; ++c) {
            a += std::fabs(st.layer_imgs[l].at(x, y, c) - inst.target.at(x, y, c));
          }
          st.layer_l1[l][static_cast<std::size_t>(y) * st.tw + x] = a;
        }
      }
    }
    return st;
  }
};

/// Rejects probes whose FD step could cross a bilinear-kernel kink (integral
/// landing coordinate). Texture probes never move the landing point.
bool kernel_safe(const Footprint& fp, const ParamRef& ref, double margin, double step) {
  if (!fp.valid) return false;
  if (ref.block == ParamRef::Block::texture) return true;
  const double mx = margin + 2.0 * std::fabs(fp.jac.dx_dd) * step;
  const double my = margin + 2.0 * std::fabs(fp.jac.dy_dd) * step;
  return distance_to_integer(fp.point.x) > mx && distance_to_integer(fp.point.y) > my;
}

/// Rejects probes whose footprint touches a masked pixel where the composite
/// view-synthesis residual could change sign during the FD step.
bool vs_tie_safe(const GradcheckInstance& inst, const RenderedState& st, const Footprint& fp,
                 const ParamRef& ref, double margin, double step, double tau) {
  if (!fp.valid) return true;  // no contribution, no residual motion
  const double tie = margin + 4.0 * step * render_sensitivity(fp, ref, tau);
  for (int ny = 0; ny < 2; ++ny) {
    for (int nx = 0; nx < 2; ++nx) {
      const int xt = fp.x0 + nx, yt = fp.y0 + ny;
      if (xt < 0 || xt >= st.tw || yt < 0 || yt >= st.th) continue;
      if (inst.mask.at(xt, yt) == 0.0) continue;
      if (ref.block == ParamRef::Block::texture) {
        if (std::fabs(st.composite.at(xt, yt, ref.channel) - inst.target.at(xt, yt, ref.channel)) <
            tie) {
          return false;
        }
      } else {
        for (int c = 0; c < 3; ++c) {
          if (std::fabs(st.composite.at(xt, yt, c) - inst.target.at(xt, yt, c)) < tie) {
            return false;
          }
        }
      }
    }
  }
  return true;
}

/// Rejects probes that could flip the argmin layer or a winning-layer residual
/// sign in the min-view-synthesis term.
bool mvs_tie_safe(const GradcheckInstance& inst, const RenderedState& st, const Footprint& fp,
                  const ParamRef& ref, double margin, double step, double tau) {
  if (!fp.valid) return true;
  const int L = static_cast<int>(st.layer_imgs.size());
  const double tie = margin + 4.0 * step * render_sensitivity(fp, ref, tau);
  const double gap = 3.0 * tie;
  for (int ny = 0; ny < 2; ++ny) {
    for (int nx = 0; nx < 2; ++nx) {
      const int xt = fp.x0 + nx, yt = fp.y0 + ny;
      if (xt < 0 || xt >= st.tw || yt < 0 || yt >= st.th) continue;
      if (inst.mask.at(xt, yt) == 0.0) continue;
      const std::size_t p = static_cast<std::size_t>(yt) * st.tw + xt;
      int best = 0;
      for (int l = 1; l < L; ++l) {
        if (st.layer_l1[static_cast<std::size_t>(l)][p] <
            st.layer_l1[static_cast<std::size_t>(best)][p]) {
          best = l;
        }
      }
      for (int l = 0; l < L; ++l) {
        if (l == best) continue;
        if (st.layer_l1[static_cast<std::size_t>(l)][p] -
                st.layer_l1[static_cast<std::size_t>(best)][p] <
            gap) {
          return false;
        }
      }
      if (best == ref.layer) {
        if (ref.block == ParamRef::Block::texture) {
          if (std::fabs(st.layer_imgs[static_cast<std::size_t>(best)].at(xt, yt, ref.channel) -
                        inst.target.at(xt, yt, ref.channel)) < tie) {
            return false;
          }
        } else {
          for (int c = 0; c < 3; ++c) {
            if (std::fabs(st.layer_imgs[static_cast<std::size_t>(best)].at(xt, yt, c) -
                          inst.target.at(xt, yt, c)) < tie) {
              return false;
            }
          }
        }
      }
    }
  }
  return true;
}

bool sc_tie_safe(const GradcheckInstance& inst, const ParamRef& ref, double margin, double step) {
  if (ref.block != ParamRef::Block::texture) return true;  // smooth in disparity
  const double tex =
      inst.ldi.layers[static_cast<std::size_t>(ref.layer)].texture.at(ref.x, ref.y, ref.channel);
  return std::fabs(tex - inst.source.at(ref.x, ref.y, ref.channel)) > margin + 2.0 * step;
}

bool inc_tie_safe(const GradcheckInstance& inst, const ParamRef& ref, double margin, double step) {
  if (ref.block != ParamRef::Block::disparity) return true;
  const double d =
      inst.ldi.layers[static_cast<std::size_t>(ref.layer)].disparity.at(ref.x, ref.y);
  const double m = margin + 2.0 * step;
  if (ref.layer > 0) {
    const double dn =
        inst.ldi.layers[static_cast<std::size_t>(ref.layer) - 1].disparity.at(ref.x, ref.y);
    if (std::fabs(dn - d) < m) return false;
  }
  if (ref.layer + 1 < inst.ldi.layer_count()) {
    const double df =
        inst.ldi.layers[static_cast<std::size_t>(ref.layer) + 1].disparity.at(ref.x, ref.y);
    if (std::fabs(d - df) < m) return false;
  }
  return true;
}

bool sm_tie_safe(const GradcheckInstance& inst, const ParamRef& ref, double margin, double step) {
  if (ref.block != ParamRef::Block::disparity) return true;
  const Image& d = inst.ldi.layers[static_cast<std::size_t>(ref.layer)].disparity;
  const int w = d.width(), h = d.height();
  const double m = margin + 4.0 * step;
  for (int cx = ref.x - 1; cx <= ref.x + 1; ++cx) {
    if (cx < 1 || cx + 1 >= w) continue;
    if (std::fabs(d.at(cx - 1, ref.y) - 2.0 * d.at(cx, ref.y) + d.at(cx + 1, ref.y)) < m) {
      return false;
    }
  }
  for (int cy = ref.y - 1; cy <= ref.y + 1; ++cy) {
    if (cy < 1 || cy + 1 >= h) continue;
    if (std::fabs(d.at(ref.x, cy - 1) - 2.0 * d.at(ref.x, cy) + d.at(ref.x, cy + 1)) < m) {
      return false;
    }
  }
  return true;
}

}  // namespace

GradcheckInstance make_gradcheck_instance(Rng& rng, int width, int height, int layers) {
  GradcheckInstance inst;
  // Temperatures bounded below so the most occluded layer keeps a weight
  // share >= e^(-0.65/0.12) ~ 4.5e-3: every audited gradient then sits well
  // above what central differences can resolve at the pinned step.
  inst.splat.tau = rng.uniform(0.12, 0.3);
  inst.splat.target_downsampling = 0.5;
  inst.weights.tau_sc = rng.uniform(0.12, 0.3);
  // A quarter of the instances run with per-pixel stabilized accumulation so
  // both accumulation paths get certified.
  if (rng.next_double() < 0.25) inst.splat.stabilization_threshold = -1.0;

  inst.ldi.d_max = 1.0;
  for (int l = 0; l < layers; ++l) {
    LdiLayer layer;
    layer.texture = Image(width, height, 3);
    layer.disparity = Image(width, height, 1);
    for (double& v : layer.texture.data()) v = rng.uniform(0.05, 0.95);
    inst.ldi.layers.push_back(std::move(layer));
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Mostly ordered, with a fraction of violations so the ordering hinge's
      // active branch gets audited too.
      double hi = rng.uniform(0.55, 0.9);
      double lo = rng.uniform(0.25, 0.5);
      const bool violate = layers > 1 && rng.next_double() < 0.25;
      for (int l = 0; l < layers; ++l) {
        const double frac = layers == 1 ? 0.0 : static_cast<double>(l) / (layers - 1);
        double d = hi + (lo - hi) * frac;
        if (violate && l == layers - 1) d = std::min(1.0, hi + rng.uniform(0.02, 0.1));
        inst.ldi.layers[static_cast<std::size_t>(l)].disparity.at(x, y) = d;
      }
    }
  }

  inst.source = Image(width, height, 3);
  for (double& v : inst.source.data()) v = rng.next_double();

  const double f = 0.9 * width * rng.uniform(0.9, 1.1);
  inst.view.source_intrinsics = {f, f, (width - 1) / 2.0, (height - 1) / 2.0};
  inst.view.target_intrinsics = inst.view.source_intrinsics;
  const double deg = kPi / 180.0;
  inst.view.relative.rotation = Mat3::rotation_x(rng.uniform(-2.0, 2.0) * deg) *
                                Mat3::rotation_y(rng.uniform(-2.0, 2.0) * deg) *
                                Mat3::rotation_z(rng.uniform(-2.0, 2.0) * deg);
  inst.view.relative.translation = {rng.uniform(-0.12, 0.12), rng.uniform(-0.12, 0.12),
                                    rng.uniform(-0.08, 0.08)};

  int tw = 0, th = 0;
  target_dims(width, height, inst.splat.target_downsampling, tw, th);
  inst.target = Image(tw, th, 3);
  for (double& v : inst.target.data()) v = rng.next_double();
  inst.mask = make_boundary_mask(tw, th, 0.0).mask;
  inst.render_upstream = Image(tw, th, 3);
  for (double& v : inst.render_upstream.data()) v = rng.uniform(-1.0, 1.0);
  return inst;
}

GradReport gradcheck_render(const GradcheckSuiteOptions& options) {
  Rng rng(options.seed);
  GradReport merged;
  GradCheckOptions check;
  check.step = options.step;
  check.tolerance = options.tolerance;
  check.kink_margin = options.kink_margin;
  check.probes_per_block = options.probes_per_block;
  // The oracle resolves ~1e-9 absolute at this step; gradients below this
  // floor (tiny weight shares, cancelling jacobian terms) are certified
  // against it in absolute terms rather than failed on unresolvable ratios.
  check.rel_floor = 3e-5;

  for (int i = 0; i < options.instances; ++i) {
    const GradcheckInstance inst =
        make_gradcheck_instance(rng, options.width, options.height, options.layers);
    const ViewTransform scaled_view = splat_view(inst.view, inst.splat.target_downsampling);

    std::vector<int> layer_selects = {kAllLayers, 0};
    if (options.layers > 1) layer_selects.push_back(options.layers - 1);
    for (int select : layer_selects) {
      // Scalar functional: fixed random weighting of the rendered image.
      const ScalarOfLdi f = [&](const Ldi& ldi) {
        const Image img = render(ldi, inst.view, inst.splat, select);
        double s = 0.0;
        for (std::size_t k = 0; k < img.size(); ++k) {
          s += img.data()[k] * inst.render_upstream.data()[k];
        }
        return s;
      };
      const GradientOfLdi g = [&](const Ldi& ldi) {
        LdiGrad grad = LdiGrad::zeros_like(ldi);
        render_backward(ldi, inst.view, inst.splat, select, inst.render_upstream, grad);
        return grad;
      };
      const ProbeFilter filter = [&](const Ldi& ldi, const ParamRef& ref) {
        const Footprint fp = probe_footprint(ldi, ref, scaled_view);
        return kernel_safe(fp, ref, options.kink_margin, options.step);
      };
      check.seed = rng.next_u64();
      GradReport r = check_gradients(f, g, inst.ldi, check, filter);
      prefix_blocks(r, select == kAllLayers ? "render.all" : "render.single");
      merged.merge(r);
    }
  }
  return merged;
}

GradReport gradcheck_losses(const GradcheckSuiteOptions& options) {
  Rng rng(options.seed);
  GradReport merged;
  GradCheckOptions check;
  check.step = options.step;
  check.tolerance = options.tolerance;
  check.kink_margin = options.kink_margin;
  check.probes_per_block = options.probes_per_block;
  check.rel_floor = 3e-5;

  for (int i = 0; i < options.instances; ++i) {
    const GradcheckInstance inst =
        make_gradcheck_instance(rng, options.width, options.height, options.layers);
    const RenderedState st = RenderedState::make(inst);
    const std::vector<ViewObservation> views = {{inst.target, inst.view}};

    // Per-term weight vectors: the backward pass with a single unit weight
    // yields exactly that term's gradient.
    const auto only = [&](double LossWeights::*field) {
      LossWeights w;
      w.vs = w.mvs = w.sc = w.inc = w.sm = 0.0;
      w.tau_sc = inst.weights.tau_sc;
      w.*field = 1.0;
      return w;
    };

    struct Term {
      const char* name;
      ScalarOfLdi f;
      LossWeights weights;
      ProbeFilter filter;
    };

    const double km = options.kink_margin, step = options.step;

    std::vector<Term> terms;
    terms.push_back({"inc", [&](const Ldi& l) { return loss_inc(l); }, only(&LossWeights::inc),
                     [&, km, step](const Ldi&, const ParamRef& ref) {
                       return inc_tie_safe(inst, ref, km, step);
                     }});
    terms.push_back({"sc",
                     [&](const Ldi& l) { return loss_sc(l, inst.source, inst.weights.tau_sc); },
                     only(&LossWeights::sc),
                     [&, km, step](const Ldi&, const ParamRef& ref) {
                       return sc_tie_safe(inst, ref, km, step);
                     }});
    terms.push_back({"sm", [&](const Ldi& l) { return loss_smooth(l); }, only(&LossWeights::sm),
                     [&, km, step](const Ldi&, const ParamRef& ref) {
                       return sm_tie_safe(inst, ref, km, step);
                     }});
    terms.push_back({"vs",
                     [&](const Ldi& l) {
                       return loss_vs(l, inst.view, inst.splat, inst.target, inst.mask);
                     },
                     only(&LossWeights::vs),
                     [&, km, step](const Ldi& ldi, const ParamRef& ref) {
                       const Footprint fp = probe_footprint(ldi, ref, st.scaled_view);
                       return kernel_safe(fp, ref, km, step) &&
                              vs_tie_safe(inst, st, fp, ref, km, step, inst.splat.tau);
                     }});
    terms.push_back({"mvs",
                     [&](const Ldi& l) {
                       return loss_mvs(l, inst.view, inst.splat, inst.target, inst.mask);
                     },
                     only(&LossWeights::mvs),
                     [&, km, step](const Ldi& ldi, const ParamRef& ref) {
                       const Footprint fp = probe_footprint(ldi, ref, st.scaled_view);
                       return kernel_safe(fp, ref, km, step) &&
                              mvs_tie_safe(inst, st, fp, ref, km, step, inst.splat.tau);
                     }});
    terms.push_back({"total",
                     [&](const Ldi& l) {
                       return loss_total(l, inst.source, views, inst.splat, inst.mask,
                                         inst.weights)
                           .total;
                     },
                     inst.weights,
                     [&, km, step](const Ldi& ldi, const ParamRef& ref) {
                       const Footprint fp = probe_footprint(ldi, ref, st.scaled_view);
                       return kernel_safe(fp, ref, km, step) &&
                              vs_tie_safe(inst, st, fp, ref, km, step, inst.splat.tau) &&
                              mvs_tie_safe(inst, st, fp, ref, km, step, inst.splat.tau) &&
                              sc_tie_safe(inst, ref, km, step) &&
                              inc_tie_safe(inst, ref, km, step) && sm_tie_safe(inst, ref, km, step);
                     }});

    for (const Term& term : terms) {
      const GradientOfLdi g = [&](const Ldi& ldi) {
        LdiGrad grad = LdiGrad::zeros_like(ldi);
        losses_backward(ldi, inst.source, views, inst.splat, inst.mask, term.weights, grad);
        return grad;
      };
      check.seed = rng.next_u64();
      GradReport r = check_gradients(term.f, g, inst.ldi, check, term.filter);
      prefix_blocks(r, term.name);
      merged.merge(r);
    }
  }
  return merged;
}

GradReport gradcheck_all(const GradcheckSuiteOptions& options) {
  GradReport report = gradcheck_render(options);
  GradcheckSuiteOptions losses_options = options;
  losses_options.seed = options.seed + 0x9e3779b9ull;
  report.merge(gradcheck_losses(losses_options));
  return report;
}

}  // namespace ldikit
