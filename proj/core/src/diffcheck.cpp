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

#include "ldikit/diffcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ldikit/rng.hpp"

namespace ldikit {

namespace {

double& param_at(Ldi& ldi, const ParamRef& ref) {
  LdiLayer& layer = ldi.layers[static_cast<std::size_t>(ref.layer)];
  if (ref.block == ParamRef::Block::texture) return layer.texture.at(ref.x, ref.y, ref.channel);
  return layer.disparity.at(ref.x, ref.y);
}

double grad_at(const LdiGrad& grad, const ParamRef& ref) {
  if (ref.block == ParamRef::Block::texture) {
    return grad.texture[static_cast<std::size_t>(ref.layer)].at(ref.x, ref.y, ref.channel);
  }
  return grad.disparity[static_cast<std::size_t>(ref.layer)].at(ref.x, ref.y);
}

double central_difference(const ScalarOfLdi& f, Ldi& scratch, const ParamRef& ref, double step) {
  double& v = param_at(scratch, ref);
  const double saved = v;
  v = saved + step;
  const double up = f(scratch);
  v = saved - step;
  const double down = f(scratch);
  v = saved;
  if (!std::isfinite(up) || !std::isfinite(down)) {
    throw std::runtime_error("fd_gradient: objective returned a non-finite value");
  }
  return (up - down) / (2.0 * step);
}

std::vector<ParamRef> block_params(const Ldi& ldi, ParamRef::Block block, int layer) {
  std::vector<ParamRef> refs;
  const int w = ldi.width(), h = ldi.height();
  const int channels = block == ParamRef::Block::texture ? 3 : 1;
  refs.reserve(static_cast<std::size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        refs.push_back({block, layer, x, y, c});
      }
    }
  }
  return refs;
}

}  // namespace

LdiGrad fd_gradient(const ScalarOfLdi& f, const Ldi& ldi, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  LdiGrad grad = LdiGrad::zeros_like(ldi);
  Ldi scratch = ldi;
  for (int l = 0; l < ldi.layer_count(); ++l) {
    for (const ParamRef::Block block : {ParamRef::Block::texture, ParamRef::Block::disparity}) {
      for (const ParamRef& ref : block_params(ldi, block, l)) {
        const double g = central_difference(f, scratch, ref, step);
        if (block == ParamRef::Block::texture) {
          grad.texture[static_cast<std::size_t>(l)].at(ref.x, ref.y, ref.channel) = g;
        } else {
          grad.disparity[static_cast<std::size_t>(l)].at(ref.x, ref.y) = g;
        }
      }
    }
  }
  return grad;
}

GradReport check_gradients(const ScalarOfLdi& f, const GradientOfLdi& grad_f, const Ldi& ldi,
                           const GradCheckOptions& options, const ProbeFilter& filter) {
  if (!(options.step > 0.0)) throw std::invalid_argument("check_gradients: step must be positive");
  const LdiGrad analytic = grad_f(ldi);
  Ldi scratch = ldi;
  Rng rng(options.seed);

  GradReport report;
  report.tolerance = options.tolerance;
  for (int l = 0; l < ldi.layer_count(); ++l) {
    for (const ParamRef::Block block : {ParamRef::Block::texture, ParamRef::Block::disparity}) {
      std::vector<ParamRef> candidates = block_params(ldi, block, l);
      // Seeded Fisher-Yates; probes are the leading accepted candidates.
      for (std::size_t i = candidates.size(); i > 1; --i) {
        std::swap(candidates[i - 1], candidates[rng.next_below(i)]);
      }

      GradReport::Block out;
      out.name = (block == ParamRef::Block::texture ? "L" + std::to_string(l) + ".texture"
                                                    : "L" + std::to_string(l) + ".disparity");
      double err_sum = 0.0;
      const int wanted = options.full_sweep ? static_cast<int>(candidates.size())
                                            : options.probes_per_block;
      for (const ParamRef& ref : candidates) {
        if (out.probes >= wanted) break;
        if (filter && !filter(ldi, ref)) {
          ++out.rejected;
          continue;
        }
        const double fd = central_difference(f, scratch, ref, options.step);
        const double an = grad_at(analytic, ref);
        const double rel =
            std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), options.rel_floor});
        out.max_rel_err = std::max(out.max_rel_err, rel);
        err_sum += rel;
        ++out.probes;
      }
      out.mean_rel_err = out.probes > 0 ? err_sum / out.probes : 0.0;
      out.pass = out.max_rel_err <= options.tolerance;
      report.pass = report.pass && out.pass;
      report.blocks.push_back(std::move(out));
    }
  }
  return report;
}

void GradReport::merge(const GradReport& other) {
  tolerance = tolerance == 0.0 ? other.tolerance : tolerance;
  for (const Block& b : other.blocks) {
    Block* mine = nullptr;
    for (Block& existing : blocks) {
      if (existing.name == b.name) {
        mine = &existing;
        break;
      }
    }
    if (!mine) {
      blocks.push_back(b);
      pass = pass && b.pass;
      continue;
    }
    const double total_err = mine->mean_rel_err * mine->probes + b.mean_rel_err * b.probes;
    mine->probes += b.probes;
    mine->rejected += b.rejected;
    mine->max_rel_err = std::max(mine->max_rel_err, b.max_rel_err);
    mine->mean_rel_err = mine->probes > 0 ? total_err / mine->probes : 0.0;
    mine->pass = mine->max_rel_err <= tolerance;
    pass = pass && mine->pass;
  }
}

std::string GradReport::to_table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %12s %12s %8s %9s %6s\n", "block", "max_rel_err",
                "mean_rel_err", "probes", "rejected", "pass");
  out += line;
  for (const Block& b : blocks) {
    std::snprintf(line, sizeof(line), "%-28s %12.3e %12.3e %8d %9d %6s\n", b.name.c_str(),
                  b.max_rel_err, b.mean_rel_err, b.probes, b.rejected, b.pass ? "yes" : "NO");
    out += line;
  }
  std::snprintf(line, sizeof(line), "overall: %s (tolerance %.1e)\n", pass ? "PASS" : "FAIL",
                tolerance);
  out += line;
  return out;
}

}  // namespace ldikit
