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

#include <benchmark/benchmark.h>

#include "ldikit/gradcheck.hpp"
#include "ldikit/losses.hpp"
#include "ldikit/scene.hpp"
#include "ldikit/splat.hpp"

namespace {

ldikit::GradcheckInstance instance_for(int size) {
  ldikit::Rng rng(42);
  return ldikit::make_gradcheck_instance(rng, size, size, 2);
}

void BM_RenderForward(benchmark::State& state) {
  const auto inst = instance_for(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto img = ldikit::render(inst.ldi, inst.view, inst.splat, ldikit::kAllLayers);
    benchmark::DoNotOptimize(img.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * 2);
}
BENCHMARK(BM_RenderForward)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_RenderBackward(benchmark::State& state) {
  const auto inst = instance_for(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ldikit::LdiGrad grad = ldikit::LdiGrad::zeros_like(inst.ldi);
    ldikit::render_backward(inst.ldi, inst.view, inst.splat, ldikit::kAllLayers,
                            inst.render_upstream, grad);
    benchmark::DoNotOptimize(grad.texture.front().data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * 2);
}
BENCHMARK(BM_RenderBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_LossTotalWithGradient(benchmark::State& state) {
  const auto inst = instance_for(static_cast<int>(state.range(0)));
  const std::vector<ldikit::ViewObservation> views = {{inst.target, inst.view}};
  for (auto _ : state) {
    ldikit::LdiGrad grad = ldikit::LdiGrad::zeros_like(inst.ldi);
    auto bd = ldikit::losses_backward(inst.ldi, inst.source, views, inst.splat, inst.mask,
                                      inst.weights, grad);
    benchmark::DoNotOptimize(bd.total);
  }
}
BENCHMARK(BM_LossTotalWithGradient)->Arg(32)->Arg(64);

void BM_Raycast(benchmark::State& state) {
  const ldikit::Scene scene = ldikit::generate_scene(7, 1, 3);
  const int size = static_cast<int>(state.range(0));
  const ldikit::Camera cam = ldikit::canonical_camera(size, size);
  for (auto _ : state) {
    auto rc = ldikit::raycast(scene, cam, size, size);
    benchmark::DoNotOptimize(rc.color.data().data());
  }
}
BENCHMARK(BM_Raycast)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
