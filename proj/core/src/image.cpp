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

#include "ldikit/image.hpp"

#include <cmath>
#include <stdexcept>

namespace ldikit {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw std::invalid_argument("Image: dimensions must be positive and channels 1 or 3");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

bool Image::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double max_abs_difference(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_difference: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  }
  return m;
}

double masked_mean_abs_difference(const Image& a, const Image& b, const Image& mask) {
  if (!a.same_shape(b)) throw std::invalid_argument("masked_mean_abs_difference: shape mismatch");
  if (mask.width() != a.width() || mask.height() != a.height() || mask.channels() != 1) {
    throw std::invalid_argument("masked_mean_abs_difference: bad mask shape");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (mask.at(x, y) == 0.0) continue;
      for (int c = 0; c < a.channels(); ++c) {
        sum += std::fabs(a.at(x, y, c) - b.at(x, y, c));
      }
      count += static_cast<std::size_t>(a.channels());
    }
  }
  if (count == 0) throw std::invalid_argument("masked_mean_abs_difference: empty mask");
  return sum / static_cast<double>(count);
}

}  // namespace ldikit
