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
#include <functional>
#include <string>
#include <vector>

#include "ldikit/ldi.hpp"

namespace ldikit {

/// Scalar objective over an LDI's texture and disparity parameters.
using ScalarOfLdi = std::function<double(const Ldi&)>;

/// Gradient routine under audit.
using GradientOfLdi = std::function<LdiGrad(const Ldi&)>;

/// Address of one scalar parameter of an LDI.
struct ParamRef {
  enum class Block { texture, disparity };
  Block block = Block::texture;
  int layer = 0;
  int x = 0;
  int y = 0;
  int channel = 0;  // unused for disparity
};

/// Returns true when the parameter may be probed; false rejects it as too
/// close to a kink/tie for central differences to be meaningful. Suites supply
/// this; the harness itself knows nothing about the objective's structure.
using ProbeFilter = std::function<bool(const Ldi&, const ParamRef&)>;

/// Central-difference gradient of f over every parameter, evaluated
/// sequentially on a scratch copy. This is the independent oracle: it only
/// ever calls f, never any analytic-gradient code.
LdiGrad fd_gradient(const ScalarOfLdi& f, const Ldi& ldi, double step);

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  double kink_margin = 1e-3;
  /// Denominator floor of the relative error |a - b| / max(|a|, |b|, floor).
  /// Central differences in double precision resolve roughly |f_noise| / 2h
  /// ~ 1e-9 absolute at the default step, so callers that must certify every
  /// probe raise this to the oracle's resolution; the default keeps the
  /// strictest reading for well-scaled gradients.
  double rel_floor = 1e-8;
  /// Probes sampled per parameter block; the full block when it is smaller.
  int probes_per_block = 200;
  std::uint64_t seed = 0;
  /// Probe every parameter instead of a random subset.
  bool full_sweep = false;
};

struct GradReport {
  struct Block {
    std::string name;
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    int probes = 0;
    int rejected = 0;
    bool pass = true;
  };
  std::vector<Block> blocks;
  double tolerance = 0.0;
  bool pass = true;

  /// Accumulates another report's blocks (matched by name) into this one.
  void merge(const GradReport& other);
  std::string to_table() const;
};

/// Compares grad_f(ldi) against central differences of f on a seeded random
/// probe subset. Relative error is |a - b| / max(|a|, |b|, 1e-8); a block
/// passes when its max relative error is within tolerance. Probes the filter
/// rejects are counted but not evaluated.
GradReport check_gradients(const ScalarOfLdi& f, const GradientOfLdi& grad_f, const Ldi& ldi,
                           const GradCheckOptions& options = {}, const ProbeFilter& filter = {});

}  // namespace ldikit
