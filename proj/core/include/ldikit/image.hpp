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

#include <cstddef>
#include <vector>

namespace ldikit {

/// Planar scalar grid: `channels` planes of height x width doubles, each plane
/// row-major. Color images use 3 channels with values in [0,1]; disparity and
/// mask images use 1 channel. Files store float32; all computation is double.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[plane_index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[plane_index(x, y, c)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  /// True when every stored value is finite.
  bool all_finite() const;

  std::size_t plane_index(int x, int y, int c) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Elementwise |a - b| maximum; shapes must match.
double max_abs_difference(const Image& a, const Image& b);

/// Mean of |a - b| over pixel-channels where mask(x, y) != 0. The mask is
/// single-channel and applies to every channel of a/b. Throws if the mask
/// selects nothing.
double masked_mean_abs_difference(const Image& a, const Image& b, const Image& mask);

}  // namespace ldikit
