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

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ldikit/eval.hpp"
#include "ldikit/losses.hpp"
#include "ldikit/splat.hpp"

namespace ldikit {

/// Numerical failure distinct from input-validation errors; the CLI maps it to
/// its own exit code.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  int iterations = 2000;
  double learning_rate = 1e-2;
  /// Cosine-decays the step to zero over the run. The L1 terms have constant
  /// subgradient magnitude, so constant-rate adaptive-moment steps chatter
  /// with amplitude ~learning_rate around their minimizers; the decay lets the
  /// iterates settle.
  enum class LrDecay { none, cosine };
  LrDecay lr_decay = LrDecay::cosine;
  double beta1 = 0.9;   // first-moment decay
  double beta2 = 0.999;  // second-moment decay
  double adam_epsilon = 1e-8;
  LossWeights weights;
  SplatConfig splat;
  double boundary_fraction = 0.1;
  /// Disparities live in (d_min, d_max) through a sigmoidal squash, keeping
  /// gradients alive at the bounds.
  double d_min = 1e-4;
  double d_max = 1.0;
  enum class Init { source, random };
  Init init_mode = Init::source;
  std::uint64_t seed = 0;
  int log_every = 50;
  int layers = 2;

  void check() const;  // throws std::invalid_argument on bad values
};

struct TraceRow {
  int iteration = 0;
  LossBreakdown losses;
};

struct FitReport {
  std::vector<TraceRow> trace;
  Ldi final_ldi;
  double wall_seconds = 0.0;
  /// Filled by callers that own ground truth (fit itself sees only images).
  EvalReport metrics;
  bool has_metrics = false;
};

/// Initial LDI for fitting. "source" copies the source image into every
/// layer's texture with constant disparities 0.6 d_max and 0.3 d_max (monotone
/// by construction); "random" draws textures uniformly and per-pixel monotone
/// disparities.
Ldi init_ldi(const Image& source, FitConfig::Init mode, int layers, double d_min, double d_max,
             std::uint64_t seed);

/// Direct gradient-based LDI recovery: adaptive-moment descent on all texture
/// and squashed-disparity parameters against the full multi-view objective.
/// Textures are clamped to [0,1] after each step. Deterministic for a fixed
/// seed and independent of thread count. Throws NumericalError (with the
/// iteration index) if the loss goes non-finite.
FitReport fit(const Image& source, const std::vector<ViewObservation>& views,
              const FitConfig& cfg);

/// The 1-layer comparison model: identical optimization with L = 1, where the
/// ordering hinge is vacuous and min-view-synthesis reduces to view synthesis.
FitReport fit_baseline_single_layer(const Image& source,
                                    const std::vector<ViewObservation>& views,
                                    const FitConfig& cfg);

}  // namespace ldikit
