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

#include "ldikit/diffcheck.hpp"
#include "ldikit/losses.hpp"
#include "ldikit/rng.hpp"
#include "ldikit/splat.hpp"

namespace ldikit {

/// Certification suites that audit every analytic gradient in the project
/// against the finite-difference oracle on randomized instances. The fitter
/// is only trusted once these pass.
struct GradcheckSuiteOptions {
  std::uint64_t seed = 1;
  int instances = 5;
  /// Per instance; accumulated across instances so each block sees well over
  /// 200 accepted probes in the default configuration.
  int probes_per_block = 64;
  int width = 8;
  int height = 8;
  int layers = 2;
  double step = 1e-4;
  double tolerance = 1e-4;
  double kink_margin = 1e-3;
};

/// One randomized problem: an LDI, a view with its observed target, and loss
/// configuration. Temperatures are drawn from [0.08, 0.3] so that no layer is
/// so deeply occluded that its true gradient falls below what central
/// differences can resolve.
struct GradcheckInstance {
  Ldi ldi;
  Image source;
  Image target;
  ViewTransform view;
  SplatConfig splat;
  LossWeights weights;
  Image mask;
  Image render_upstream;  // fixed random linear functional for the render check
};

GradcheckInstance make_gradcheck_instance(Rng& rng, int width, int height, int layers);

/// render()/render_backward() against the oracle, composite and single-layer.
GradReport gradcheck_render(const GradcheckSuiteOptions& options = {});

/// All five loss terms plus loss_total/losses_backward against the oracle.
GradReport gradcheck_losses(const GradcheckSuiteOptions& options = {});

/// Both suites merged.
GradReport gradcheck_all(const GradcheckSuiteOptions& options = {});

}  // namespace ldikit
