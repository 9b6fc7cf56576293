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

#include "ldikit/ldi.hpp"

#include <cmath>
#include <stdexcept>

namespace ldikit {

Ldi Ldi::constant(int width, int height, const std::vector<double>& layer_disparities,
                  double texture_value, double d_max) {
  Ldi ldi;
  ldi.d_max = d_max;
  for (double d : layer_disparities) {
    LdiLayer layer;
    layer.texture = Image(width, height, 3, texture_value);
    layer.disparity = Image(width, height, 1, d);
    ldi.layers.push_back(std::move(layer));
  }
  return ldi;
}

namespace {

void check_shapes(const Ldi& ldi, std::vector<LdiViolation>& out) {
  if (ldi.layers.empty()) return;
  const int w = ldi.width(), h = ldi.height();
  for (int l = 0; l < ldi.layer_count(); ++l) {
    const LdiLayer& layer = ldi.layers[static_cast<std::size_t>(l)];
    const bool ok = layer.texture.width() == w && layer.texture.height() == h &&
                    layer.texture.channels() == 3 && layer.disparity.width() == w &&
                    layer.disparity.height() == h && layer.disparity.channels() == 1;
    if (!ok) {
      out.push_back({LdiViolation::Kind::shape, l, -1, -1, "layer images disagree on shape"});
    }
  }
}

void check_ranges(const Ldi& ldi, std::vector<LdiViolation>& out) {
  for (int l = 0; l < ldi.layer_count(); ++l) {
    const LdiLayer& layer = ldi.layers[static_cast<std::size_t>(l)];
    for (int y = 0; y < layer.disparity.height(); ++y) {
      for (int x = 0; x < layer.disparity.width(); ++x) {
        const double d = layer.disparity.at(x, y);
        if (!std::isfinite(d)) {
          out.push_back({LdiViolation::Kind::non_finite, l, x, y, "non-finite disparity"});
        } else if (!(d > 0.0) || d > ldi.d_max) {
          out.push_back({LdiViolation::Kind::range, l, x, y, "disparity outside (0, d_max]"});
        }
        for (int c = 0; c < 3; ++c) {
          if (!std::isfinite(layer.texture.at(x, y, c))) {
            out.push_back({LdiViolation::Kind::non_finite, l, x, y, "non-finite texture"});
            break;
          }
        }
      }
    }
  }
}

}  // namespace

std::vector<LdiViolation> validate_ranges(const Ldi& ldi) {
  std::vector<LdiViolation> out;
  check_shapes(ldi, out);
  if (!out.empty()) return out;
  check_ranges(ldi, out);
  return out;
}

std::vector<LdiViolation> validate(const Ldi& ldi) {
  std::vector<LdiViolation> out;
  check_shapes(ldi, out);
  if (!out.empty()) return out;
  check_ranges(ldi, out);
  for (int l = 0; l + 1 < ldi.layer_count(); ++l) {
    const Image& near = ldi.layers[static_cast<std::size_t>(l)].disparity;
    const Image& far = ldi.layers[static_cast<std::size_t>(l) + 1].disparity;
    for (int y = 0; y < near.height(); ++y) {
      for (int x = 0; x < near.width(); ++x) {
        if (far.at(x, y) > near.at(x, y)) {
          out.push_back({LdiViolation::Kind::ordering, l, x, y,
                         "disparity increases from layer l to l+1"});
        }
      }
    }
  }
  return out;
}

BoundaryMask make_boundary_mask(int width, int height, double fraction) {
  if (!(fraction >= 0.0) || fraction >= 0.5) {
    throw std::invalid_argument("make_boundary_mask: fraction must be in [0, 0.5)");
  }
  const int bx = static_cast<int>(std::ceil(fraction * width));
  const int by = static_cast<int>(std::ceil(fraction * height));
  BoundaryMask bm;
  bm.fraction = fraction;
  bm.mask = Image(width, height, 1, 0.0);
  for (int y = by; y < height - by; ++y) {
    for (int x = bx; x < width - bx; ++x) {
      bm.mask.at(x, y) = 1.0;
    }
  }
  return bm;
}

LdiGrad LdiGrad::zeros_like(const Ldi& ldi) {
  LdiGrad g;
  for (const LdiLayer& layer : ldi.layers) {
    g.texture.emplace_back(layer.texture.width(), layer.texture.height(), 3, 0.0);
    g.disparity.emplace_back(layer.disparity.width(), layer.disparity.height(), 1, 0.0);
  }
  return g;
}

void LdiGrad::add_scaled(const LdiGrad& other, double scale) {
  if (other.texture.size() != texture.size()) {
    throw std::invalid_argument("LdiGrad::add_scaled: layer count mismatch");
  }
  for (std::size_t l = 0; l < texture.size(); ++l) {
    for (std::size_t i = 0; i < texture[l].size(); ++i) {
      texture[l].data()[i] += scale * other.texture[l].data()[i];
    }
    for (std::size_t i = 0; i < disparity[l].size(); ++i) {
      disparity[l].data()[i] += scale * other.disparity[l].data()[i];
    }
  }
}

}  // namespace ldikit
