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

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ldikit/gradcheck.hpp"
#include "ldikit/losses.hpp"
#include "ldikit/rng.hpp"

using namespace ldikit;

namespace {

Image ones_mask(int w, int h) { return Image(w, h, 1, 1.0); }

}  // namespace

TEST_CASE("loss_inc: monotone, violated, and single-layer cases") {
  Ldi monotone = Ldi::constant(4, 4, {0.8, 0.3});
  CHECK(loss_inc(monotone) == 0.0);

  Ldi bad = monotone;
  bad.layers[0].disparity.at(2, 2) = 0.5;
  bad.layers[1].disparity.at(2, 2) = 0.7;
  CHECK(loss_inc(bad) == doctest::Approx(0.2).epsilon(1e-12));

  CHECK(loss_inc(Ldi::constant(4, 4, {0.5})) == 0.0);
}

TEST_CASE("layer_weights: symmetry, softmax limit, single layer") {
  const auto equal = layer_weights({0.4, 0.4}, 0.02);
  CHECK(equal[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(equal[1] == doctest::Approx(0.5).epsilon(1e-14));

  const auto skewed = layer_weights({1.0, 0.0}, 0.02);
  CHECK(skewed[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(skewed[1] == doctest::Approx(2e-22).epsilon(0.01));

  const auto single = layer_weights({0.7}, 0.02);
  CHECK(single.size() == 1);
  CHECK(single[0] == 1.0);
}

TEST_CASE("layer_weights: normalization and shift invariance") {
  Rng rng(71);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> d = {rng.next_double(), rng.next_double(), rng.next_double()};
    const double tau = rng.uniform(0.02, 0.5);
    const auto w = layer_weights(d, tau);
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);

    const double shift = rng.uniform(-0.5, 0.5);
    std::vector<double> shifted = d;
    for (double& v : shifted) v += shift;
    const auto w2 = layer_weights(shifted, tau);
    for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::fabs(w[k] - w2[k]) <= 1e-12);
  }
}

TEST_CASE("loss_sc: zero when every layer matches the source") {
  Rng rng(73);
  Ldi ldi = Ldi::constant(6, 6, {0.8, 0.3});
  Image source(6, 6, 3);
  for (double& v : source.data()) v = rng.next_double();
  ldi.layers[0].texture = source;
  ldi.layers[1].texture = source;
  CHECK(loss_sc(ldi, source, 0.02) == 0.0);
}

TEST_CASE("loss_sc: foreground deviation counts fully, occluded deviation vanishes") {
  // Large disparity gap: layer 0 weight ~ 1, layer 1 weight ~ 2e-22.
  Ldi ldi = Ldi::constant(4, 4, {1.0, 1e-4});
  Image source(4, 4, 3, 0.5);
  ldi.layers[0].texture = source;
  ldi.layers[1].texture = source;

  SUBCASE("background-only deviation is forgiven under occlusion") {
    for (double& v : ldi.layers[1].texture.data()) v = 0.9;
    CHECK(loss_sc(ldi, source, 0.02) < 1e-15);
  }
  SUBCASE("foreground deviation contributes its full per-pixel-channel L1") {
    for (double& v : ldi.layers[0].texture.data()) v = 0.6;  // |diff| = 0.1 per channel
    CHECK(loss_sc(ldi, source, 0.02) == doctest::Approx(0.1).epsilon(1e-9));
  }
}

TEST_CASE("loss_vs: exact render, masked-out difference, uniform difference") {
  Rng rng(79);
  Ldi ldi = Ldi::constant(8, 8, {0.7, 0.35}, 0.4);
  for (double& v : ldi.layers[0].texture.data()) v = rng.next_double();
  SplatConfig cfg;
  const ViewTransform v = ViewTransform::identity({7.0, 7.0, 3.5, 3.5});
  const Image rendered = render(ldi, v, cfg);
  const Image mask = make_boundary_mask(4, 4, 0.1).mask;

  CHECK(loss_vs(ldi, v, cfg, rendered, mask) == 0.0);

  Image border_diff = rendered;
  border_diff.at(0, 0, 0) += 0.7;  // masked out
  CHECK(loss_vs(ldi, v, cfg, border_diff, mask) == 0.0);

  Image uniform = rendered;
  for (double& value : uniform.data()) value -= 0.1;
  CHECK(loss_vs(ldi, v, cfg, uniform, mask) == doctest::Approx(0.1).epsilon(1e-9));

  CHECK_THROWS_AS(loss_vs(ldi, v, cfg, Image(3, 3, 3), mask), std::invalid_argument);
}

TEST_CASE("loss_mvs: single layer reduces to loss_vs") {
  Rng rng(83);
  Ldi ldi = Ldi::constant(8, 8, {0.6}, 0.4);
  for (double& v : ldi.layers[0].texture.data()) v = rng.next_double();
  SplatConfig cfg;
  const ViewTransform v = ViewTransform::identity({7.0, 7.0, 3.5, 3.5});
  Image target(4, 4, 3);
  for (double& value : target.data()) value = rng.next_double();
  const Image mask = ones_mask(4, 4);
  CHECK(loss_mvs(ldi, v, cfg, target, mask) ==
        doctest::Approx(loss_vs(ldi, v, cfg, target, mask)).epsilon(1e-12));
}

TEST_CASE("loss_mvs: a pixel explained by any one layer contributes zero") {
  Ldi ldi = Ldi::constant(4, 4, {0.8, 0.4}, 0.2);
  for (double& v : ldi.layers[1].texture.data()) v = 0.9;
  SplatConfig cfg;
  cfg.target_downsampling = 1.0;
  const ViewTransform v = ViewTransform::identity({1.0, 1.0, 0.0, 0.0});
  // Target equals the layer-1 render exactly: min picks it everywhere.
  const Image target = render(ldi, v, cfg, 1);
  CHECK(loss_mvs(ldi, v, cfg, target, ones_mask(4, 4)) < 1e-12);
  // The composite is dominated by layer 0, so vs sees a real error.
  CHECK(loss_vs(ldi, v, cfg, target, ones_mask(4, 4)) > 0.1);
}

TEST_CASE("loss_mvs lower-bounds every per-layer vs loss (min property)") {
  Rng rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    const GradcheckInstance inst = make_gradcheck_instance(rng, 8, 8, 2);
    const double mvs = loss_mvs(inst.ldi, inst.view, inst.splat, inst.target, inst.mask);
    for (int l = 0; l < 2; ++l) {
      Ldi single;
      single.d_max = inst.ldi.d_max;
      single.layers.push_back(inst.ldi.layers[static_cast<std::size_t>(l)]);
      const double layer_vs =
          loss_vs(single, inst.view, inst.splat, inst.target, inst.mask);
      CHECK(mvs <= layer_vs + 1e-12);
    }
  }
}

TEST_CASE("loss_smooth: constant, affine, and single-bump fields") {
  CHECK(loss_smooth(Ldi::constant(8, 6, {0.5, 0.25})) == 0.0);

  Ldi affine = Ldi::constant(8, 6, {0.5});
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) {
      affine.layers[0].disparity.at(x, y) = 0.2 + 0.01 * x + 0.02 * y;
    }
  }
  CHECK(loss_smooth(affine) < 1e-15);

  const double h = 0.05;
  Ldi bump = Ldi::constant(8, 6, {0.5});
  bump.layers[0].disparity.at(4, 3) += h;
  const double denom = 1.0 * (6 * (8 - 2) + 8 * (6 - 2));
  CHECK(loss_smooth(bump) == doctest::Approx(8.0 * h / denom).epsilon(1e-12));

  CHECK_THROWS_AS(loss_smooth(Ldi::constant(2, 6, {0.5})), std::invalid_argument);
}

TEST_CASE("loss_total: weights combine terms per the breakdown invariant") {
  Rng rng(97);
  const GradcheckInstance inst = make_gradcheck_instance(rng, 8, 8, 2);
  const std::vector<ViewObservation> views = {{inst.target, inst.view}};

  LossWeights zero;
  zero.vs = zero.mvs = zero.sc = zero.inc = zero.sm = 0.0;
  const LossBreakdown none =
      loss_total(inst.ldi, inst.source, views, inst.splat, inst.mask, zero);
  CHECK(none.total == 0.0);

  // Defaults reproduce the documented weighting (1, 1, 10, 1, 0.1).
  LossWeights defaults;
  CHECK(defaults.vs == 1.0);
  CHECK(defaults.mvs == 1.0);
  CHECK(defaults.sc == 10.0);
  CHECK(defaults.inc == 1.0);
  CHECK(defaults.sm == 0.1);

  const LossBreakdown bd =
      loss_total(inst.ldi, inst.source, views, inst.splat, inst.mask, defaults);
  const double recombined = defaults.vs * bd.vs + defaults.mvs * bd.mvs + defaults.sc * bd.sc +
                            defaults.inc * bd.inc + defaults.sm * bd.sm;
  CHECK(std::fabs(bd.total - recombined) <= 1e-12 * std::max(1.0, std::fabs(bd.total)));
  CHECK(bd.vs >= 0.0);
  CHECK(bd.mvs >= 0.0);
  CHECK(bd.sc >= 0.0);
  CHECK(bd.inc >= 0.0);
  CHECK(bd.sm >= 0.0);

  // Individual term functions agree with the combined evaluation.
  CHECK(bd.inc == doctest::Approx(loss_inc(inst.ldi)).epsilon(1e-12));
  CHECK(bd.sc ==
        doctest::Approx(loss_sc(inst.ldi, inst.source, defaults.tau_sc)).epsilon(1e-12));
  CHECK(bd.sm == doctest::Approx(loss_smooth(inst.ldi)).epsilon(1e-12));
  CHECK(bd.vs == doctest::Approx(loss_vs(inst.ldi, inst.view, inst.splat, inst.target,
                                         inst.mask))
                     .epsilon(1e-12));
  CHECK(bd.mvs == doctest::Approx(loss_mvs(inst.ldi, inst.view, inst.splat, inst.target,
                                           inst.mask))
                      .epsilon(1e-12));

  CHECK_THROWS_AS(loss_total(inst.ldi, inst.source, {}, inst.splat, inst.mask, defaults),
                  std::invalid_argument);
}

TEST_CASE("loss_total averages the view losses over views") {
  Rng rng(101);
  const GradcheckInstance a = make_gradcheck_instance(rng, 8, 8, 2);
  GradcheckInstance b = a;
  for (double& v : b.target.data()) v = rng.next_double();

  const std::vector<ViewObservation> both = {{a.target, a.view}, {b.target, b.view}};
  LossWeights w;
  const LossBreakdown bd1 = loss_total(a.ldi, a.source, {{a.target, a.view}}, a.splat, a.mask, w);
  const LossBreakdown bd2 = loss_total(a.ldi, a.source, {{b.target, b.view}}, a.splat, a.mask, w);
  const LossBreakdown bd = loss_total(a.ldi, a.source, both, a.splat, a.mask, w);
  CHECK(bd.vs == doctest::Approx(0.5 * (bd1.vs + bd2.vs)).epsilon(1e-12));
  CHECK(bd.mvs == doctest::Approx(0.5 * (bd1.mvs + bd2.mvs)).epsilon(1e-12));
}

TEST_CASE("losses_backward: strictly monotone LDI has zero ordering gradient") {
  Rng rng(103);
  GradcheckInstance inst = make_gradcheck_instance(rng, 8, 8, 2);
  // Force strict ordering everywhere.
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      inst.ldi.layers[0].disparity.at(x, y) = rng.uniform(0.6, 0.9);
      inst.ldi.layers[1].disparity.at(x, y) = rng.uniform(0.2, 0.5);
    }
  }
  LossWeights only_inc;
  only_inc.vs = only_inc.mvs = only_inc.sc = only_inc.sm = 0.0;
  only_inc.inc = 1.0;
  LdiGrad grad = LdiGrad::zeros_like(inst.ldi);
  const LossBreakdown bd =
      losses_backward(inst.ldi, inst.source, {{inst.target, inst.view}}, inst.splat, inst.mask,
                      only_inc, grad);
  CHECK(bd.inc == 0.0);
  for (const Image& g : grad.disparity) {
    for (double v : g.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("losses_backward: source-consistency texture gradient formula") {
  // At one pixel: d(sc)/dI^l[c] = w_l * sign(I^l[c] - I_s[c]).
  Ldi ldi = Ldi::constant(4, 4, {0.8, 0.5}, 0.6);
  Image source(4, 4, 3, 0.5);
  SplatConfig cfg;
  cfg.target_downsampling = 1.0;
  LossWeights only_sc;
  only_sc.vs = only_sc.mvs = only_sc.inc = only_sc.sm = 0.0;
  only_sc.sc = 1.0;
  only_sc.tau_sc = 0.1;
  const ViewTransform v = ViewTransform::identity({1.0, 1.0, 0.0, 0.0});
  const Image target = render(ldi, v, cfg);

  LdiGrad grad = LdiGrad::zeros_like(ldi);
  losses_backward(ldi, source, {{target, v}}, cfg, ones_mask(4, 4), only_sc, grad);

  const auto w = layer_weights({0.8, 0.5}, only_sc.tau_sc);
  const double norm = 1.0 / (3.0 * 16.0);
  for (int l = 0; l < 2; ++l) {
    // Textures (0.6) sit above the source (0.5): sign is +1.
    CHECK(grad.texture[static_cast<std::size_t>(l)].at(2, 2, 0) ==
          doctest::Approx(norm * w[static_cast<std::size_t>(l)]).epsilon(1e-9));
  }
}
