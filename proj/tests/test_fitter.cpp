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
#include <cstdlib>
#include <stdexcept>

#include "ldikit/fitter.hpp"
#include "ldikit/io.hpp"
#include "ldikit/scene.hpp"

using namespace ldikit;

namespace {

struct TinyProblem {
  Scene scene;
  Camera source_cam;
  std::vector<Camera> target_cams;
  Image source;
  std::vector<ViewObservation> views;
};

TinyProblem make_problem(std::uint64_t seed, int size, int n_views, bool with_sprites = true) {
  TinyProblem p;
  p.scene = generate_scene(seed, 1, 2);
  if (!with_sprites) p.scene.sprites.clear();
  p.source_cam = canonical_camera(size, size);
  p.source = raycast(p.scene, p.source_cam, size, size).color;
  Rng rng(seed * 7 + 1);
  const SplatConfig splat;
  for (int i = 0; i < n_views; ++i) {
    const Camera target = sample_perturbed_camera(rng, ViewSampleRanges{}, p.source_cam);
    p.target_cams.push_back(target);
    const Camera small = scale_camera(target, splat.target_downsampling);
    p.views.push_back({raycast(p.scene, small, small.width, small.height).color,
                       make_view_transform(p.source_cam, target)});
  }
  return p;
}

FitConfig quick_config(int iterations) {
  FitConfig cfg;
  cfg.iterations = iterations;
  cfg.log_every = 10;
  return cfg;
}

}  // namespace

TEST_CASE("init_ldi: source mode satisfies the stated start conditions") {
  Rng rng(1);
  Image source(8, 8, 3);
  for (double& v : source.data()) v = rng.next_double();
  const Ldi ldi = init_ldi(source, FitConfig::Init::source, 2, 1e-4, 1.0, 0);

  CHECK(loss_sc(ldi, source, 0.02) == 0.0);  // textures equal the source
  CHECK(loss_inc(ldi) == 0.0);               // constant ordered disparities
  CHECK(validate(ldi).empty());
  CHECK(ldi.layers[0].disparity.at(3, 3) == doctest::Approx(0.6));
  CHECK(ldi.layers[1].disparity.at(3, 3) == doctest::Approx(0.3));
}

TEST_CASE("init_ldi: random mode is range-clean and ordered") {
  Image source(8, 8, 3, 0.5);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Ldi ldi = init_ldi(source, FitConfig::Init::random, 2, 1e-4, 1.0, seed);
    CHECK(validate(ldi).empty());
  }
  const Ldi a = init_ldi(source, FitConfig::Init::random, 2, 1e-4, 1.0, 9);
  const Ldi b = init_ldi(source, FitConfig::Init::random, 2, 1e-4, 1.0, 9);
  CHECK(a.layers[0].texture.at(2, 2, 1) == b.layers[0].texture.at(2, 2, 1));
}

TEST_CASE("fit: rejects an empty view list") {
  Image source(8, 8, 3, 0.5);
  CHECK_THROWS_AS(fit(source, {}, quick_config(10)), std::invalid_argument);
}

TEST_CASE("fit: zero learning rate leaves the trace constant") {
  const TinyProblem p = make_problem(5, 16, 2);
  FitConfig cfg = quick_config(40);
  cfg.learning_rate = 0.0;
  const FitReport report = fit(p.source, p.views, cfg);
  REQUIRE(report.trace.size() >= 2);
  for (const TraceRow& row : report.trace) {
    CHECK(row.losses.total == report.trace.front().losses.total);
  }
}

TEST_CASE("fit: loss decreases on a small synthetic problem") {
  const TinyProblem p = make_problem(8, 16, 2);
  const FitReport report = fit(p.source, p.views, quick_config(250));
  const LossBreakdown& first = report.trace.front().losses;
  const LossBreakdown& last = report.trace.back().losses;
  CHECK(last.total < first.total);
  CHECK(last.vs < first.vs);
  CHECK(validate_ranges(report.final_ldi).empty());
}

TEST_CASE("fit: disparities stay strictly inside (d_min, d_max)") {
  const TinyProblem p = make_problem(10, 16, 2);
  FitConfig cfg = quick_config(120);
  const FitReport report = fit(p.source, p.views, cfg);
  for (const LdiLayer& layer : report.final_ldi.layers) {
    for (double d : layer.disparity.data()) {
      CHECK(d > cfg.d_min);
      CHECK(d < cfg.d_max);
    }
  }
}

TEST_CASE("fit: exponential moving average of the trace is non-increasing") {
  const TinyProblem p = make_problem(12, 16, 2);
  FitConfig cfg = quick_config(400);
  cfg.log_every = 1;
  const FitReport report = fit(p.source, p.views, cfg);
  double ema = report.trace.front().losses.total;
  double prev_window = ema;
  int i = 0;
  for (const TraceRow& row : report.trace) {
    ema = 0.98 * ema + 0.02 * row.losses.total;
    if (++i % 100 == 0) {
      CHECK(ema <= prev_window * 1.001);
      prev_window = ema;
    }
  }
}

TEST_CASE("fit: bitwise reproducible across seeds and thread counts") {
  const TinyProblem p = make_problem(14, 16, 2);
  FitConfig cfg = quick_config(60);

  setenv("LDIKIT_THREADS", "1", 1);
  const FitReport a = fit(p.source, p.views, cfg);
  setenv("LDIKIT_THREADS", "5", 1);
  const FitReport b = fit(p.source, p.views, cfg);
  unsetenv("LDIKIT_THREADS");

  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    REQUIRE(a.trace[i].losses.total == b.trace[i].losses.total);
  }
  for (int l = 0; l < 2; ++l) {
    const auto& da = a.final_ldi.layers[static_cast<std::size_t>(l)];
    const auto& db = b.final_ldi.layers[static_cast<std::size_t>(l)];
    REQUIRE(max_abs_difference(da.texture, db.texture) == 0.0);
    REQUIRE(max_abs_difference(da.disparity, db.disparity) == 0.0);
  }
}

TEST_CASE("fit_baseline_single_layer: produces one layer and tracks fit on open scenes") {
  // Without occluders both models reduce to depth-map fitting.
  const TinyProblem p = make_problem(16, 16, 3, /*with_sprites=*/false);
  FitConfig cfg = quick_config(250);
  const FitReport two = fit(p.source, p.views, cfg);
  const FitReport one = fit_baseline_single_layer(p.source, p.views, cfg);
  CHECK(one.final_ldi.layer_count() == 1);
  CHECK(two.final_ldi.layer_count() == 2);
  CHECK(one.trace.back().losses.vs < one.trace.front().losses.vs);
  CHECK(two.trace.back().losses.vs < two.trace.front().losses.vs);
  // Comparable view-synthesis quality when nothing is occluded.
  CHECK(one.trace.back().losses.vs < 2.5 * two.trace.back().losses.vs + 1e-3);
  CHECK(two.trace.back().losses.vs < 2.5 * one.trace.back().losses.vs + 1e-3);
}

TEST_CASE("FitConfig validation and config file parsing") {
  FitConfig bad;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = FitConfig{};
  bad.d_min = 0.0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = FitConfig{};
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);

  const std::map<std::string, std::string> kv = {
      {"zbuf_scale", "50"},          {"splat_bdry_ignore", "0.1"},
      {"trg_splat_downsampling", "0.5"}, {"compose_splat_wt", "1"},
      {"indep_splat_wt", "1"},       {"self_cons_wt", "10"},
      {"disp_smoothness_wt", "0.1"}, {"n_layers", "2"},
      {"iterations", "123"},         {"learning_rate", "0.02"}};
  const FitConfig cfg = fit_config_from_map(kv);
  CHECK(cfg.splat.tau == doctest::Approx(0.02));
  CHECK(cfg.boundary_fraction == 0.1);
  CHECK(cfg.weights.sc == 10.0);
  CHECK(cfg.iterations == 123);
  CHECK(cfg.learning_rate == 0.02);

  CHECK_THROWS_AS(fit_config_from_map({{"zbuf_scal", "50"}}), std::runtime_error);
  CHECK_THROWS_AS(fit_config_from_map({{"zbuf_scale", "abc"}}), std::runtime_error);
}
