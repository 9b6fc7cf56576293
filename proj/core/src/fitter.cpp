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

#include "ldikit/fitter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "ldikit/rng.hpp"

namespace ldikit {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

/// Disparity parameterization d = d_min + (d_max - d_min) * sigmoid(theta).
struct Squash {
  double lo, hi;
  double forward(double theta) const { return lo + (hi - lo) * sigmoid(theta); }
  double backward_factor(double theta) const {
    const double s = sigmoid(theta);
    return (hi - lo) * s * (1.0 - s);
  }
  double inverse(double d) const {
    const double p = std::clamp((d - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    return logit(p);
  }
};

/// Elementwise adaptive-moment update state for one parameter vector.
struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad, const FitConfig& cfg,
            double rate, int t) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
};

}  // namespace

void FitConfig::check() const {
  if (iterations <= 0) throw std::invalid_argument("FitConfig: iterations must be positive");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("FitConfig: learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("FitConfig: decay rates must lie in (0, 1)");
  }
  if (!(d_min > 0.0) || !(d_min < d_max)) {
    throw std::invalid_argument("FitConfig: need 0 < d_min < d_max");
  }
  if (layers < 1) throw std::invalid_argument("FitConfig: layers must be >= 1");
  if (log_every < 1) throw std::invalid_argument("FitConfig: log_every must be >= 1");
}

Ldi init_ldi(const Image& source, FitConfig::Init mode, int layers, double d_min, double d_max,
             std::uint64_t seed) {
  if (source.channels() != 3) throw std::invalid_argument("init_ldi: source must be 3-channel");
  Ldi ldi;
  ldi.d_max = d_max;
  const auto clamp_d = [&](double d) { return std::clamp(d, d_min, d_max); };
  if (mode == FitConfig::Init::source) {
    for (int l = 0; l < layers; ++l) {
      LdiLayer layer;
      layer.texture = source;
      const double d = l == 0 ? 0.6 * d_max : 0.3 * d_max / static_cast<double>(l);
      layer.disparity = Image(source.width(), source.height(), 1, clamp_d(d));
      ldi.layers.push_back(std::move(layer));
    }
    return ldi;
  }
  if (mode == FitConfig::Init::random) {
    Rng rng(seed);
    for (int l = 0; l < layers; ++l) {
      ldi.layers.push_back(
          {Image(source.width(), source.height(), 3), Image(source.width(), source.height(), 1)});
    }
    for (int l = 0; l < layers; ++l) {
      for (double& v : ldi.layers[static_cast<std::size_t>(l)].texture.data()) {
        v = rng.next_double();
      }
    }
    for (int y = 0; y < source.height(); ++y) {
      for (int x = 0; x < source.width(); ++x) {
        double d = clamp_d(rng.uniform(0.5 * d_max, 0.95 * d_max));
        for (int l = 0; l < layers; ++l) {
          ldi.layers[static_cast<std::size_t>(l)].disparity.at(x, y) = d;
          d = clamp_d(d * rng.uniform(0.4, 0.9));  // monotone by construction
        }
      }
    }
    return ldi;
  }
  throw std::invalid_argument("init_ldi: unknown init mode");
}

FitReport fit(const Image& source, const std::vector<ViewObservation>& views,
              const FitConfig& cfg) {
  cfg.check();
  if (views.empty()) throw std::invalid_argument("fit: at least one view is required");
  const auto start = std::chrono::steady_clock::now();

  Ldi ldi = init_ldi(source, cfg.init_mode, cfg.layers, cfg.d_min, cfg.d_max, cfg.seed);
  const int w = ldi.width(), h = ldi.height();
  int tw = 0, th = 0;
  target_dims(w, h, cfg.splat.target_downsampling, tw, th);
  const Image mask = make_boundary_mask(tw, th, cfg.boundary_fraction).mask;

  const Squash squash{cfg.d_min, cfg.d_max};
  const std::size_t n_disp = static_cast<std::size_t>(w) * h;
  const int L = cfg.layers;

  // Flat parameter vectors per layer: textures directly, disparities through
  // the squash.
  std::vector<std::vector<double>> tex_params(static_cast<std::size_t>(L));
  std::vector<std::vector<double>> disp_params(static_cast<std::size_t>(L));
  std::vector<AdamState> tex_state, disp_state;
  for (int l = 0; l < L; ++l) {
    tex_params[static_cast<std::size_t>(l)] = ldi.layers[static_cast<std::size_t>(l)].texture.data();
    disp_params[static_cast<std::size_t>(l)].resize(n_disp);
    for (std::size_t i = 0; i < n_disp; ++i) {
      disp_params[static_cast<std::size_t>(l)][i] =
          squash.inverse(ldi.layers[static_cast<std::size_t>(l)].disparity.data()[i]);
    }
    tex_state.emplace_back(tex_params[static_cast<std::size_t>(l)].size());
    disp_state.emplace_back(n_disp);
  }

  const auto refresh_ldi = [&] {
    for (int l = 0; l < L; ++l) {
      ldi.layers[static_cast<std::size_t>(l)].texture.data() = tex_params[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < n_disp; ++i) {
        ldi.layers[static_cast<std::size_t>(l)].disparity.data()[i] =
            squash.forward(disp_params[static_cast<std::size_t>(l)][i]);
      }
    }
  };
  refresh_ldi();

  FitReport report;
  std::vector<double> disp_grad(n_disp);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    LdiGrad grad = LdiGrad::zeros_like(ldi);
    const LossBreakdown bd =
        losses_backward(ldi, source, views, cfg.splat, mask, cfg.weights, grad);
    if (!std::isfinite(bd.total)) {
      throw NumericalError("fit: non-finite loss at iteration " + std::to_string(iter));
    }
    if (iter % cfg.log_every == 0) report.trace.push_back({iter, bd});

    const double rate =
        cfg.lr_decay == FitConfig::LrDecay::cosine
            ? cfg.learning_rate * 0.5 *
                  (1.0 + std::cos(3.14159265358979323846 * iter / cfg.iterations))
            : cfg.learning_rate;
    for (int l = 0; l < L; ++l) {
      tex_state[static_cast<std::size_t>(l)].step(tex_params[static_cast<std::size_t>(l)],
                                                  grad.texture[static_cast<std::size_t>(l)].data(),
                                                  cfg, rate, iter + 1);
      for (double& v : tex_params[static_cast<std::size_t>(l)]) v = std::clamp(v, 0.0, 1.0);
      // Chain through the squash into raw disparity space.
      for (std::size_t i = 0; i < n_disp; ++i) {
        disp_grad[i] = grad.disparity[static_cast<std::size_t>(l)].data()[i] *
                       squash.backward_factor(disp_params[static_cast<std::size_t>(l)][i]);
      }
      disp_state[static_cast<std::size_t>(l)].step(disp_params[static_cast<std::size_t>(l)],
                                                   disp_grad, cfg, rate, iter + 1);
    }
    refresh_ldi();
  }

  // Final evaluation so the trace always ends at the last iterate.
  const LossBreakdown final_bd = loss_total(ldi, source, views, cfg.splat, mask, cfg.weights);
  if (!std::isfinite(final_bd.total)) {
    throw NumericalError("fit: non-finite loss after final iteration");
  }
  report.trace.push_back({cfg.iterations, final_bd});
  report.final_ldi = std::move(ldi);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

FitReport fit_baseline_single_layer(const Image& source,
                                    const std::vector<ViewObservation>& views,
                                    const FitConfig& cfg) {
  FitConfig single = cfg;
  single.layers = 1;
  return fit(source, views, single);
}

}  // namespace ldikit
