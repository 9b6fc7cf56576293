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

#include <map>
#include <string>
#include <vector>

#include "ldikit/eval.hpp"
#include "ldikit/fitter.hpp"
#include "ldikit/image.hpp"
#include "ldikit/ldi.hpp"
#include "ldikit/scene.hpp"

namespace ldikit {

// All text formats print floats with 17 significant digits so serialization
// round-trips doubles exactly; binary payloads are little-endian float32
// planes regardless of host order.

/// 8-bit PNG for viewing (1-channel gray or 3-channel RGB). Values are clamped
/// to [0,1] and quantized; metrics never read these back.
void write_png(const std::string& path, const Image& image);

/// Raw float image: text header "ldikit-image 1 W H C" + float32 planes in
/// channel-major, row-major order.
void write_image_raw(const std::string& path, const Image& image);
Image read_image_raw(const std::string& path);

/// LDI container: text header "ldikit-ldi 1 W H L d_max" followed by per-layer
/// planes (3 texture channels then disparity), layer-major.
void write_ldi(const std::string& path, const Ldi& ldi);
Ldi read_ldi(const std::string& path);

struct CameraRig {
  Camera source;
  std::vector<Camera> targets;
};
void write_cameras(const std::string& path, const CameraRig& rig);
CameraRig read_cameras(const std::string& path);

void write_scene(const std::string& path, const Scene& scene);
Scene read_scene(const std::string& path);

/// key = value lines; '#' starts a comment. Unknown keys are the caller's
/// problem so configs fail loudly rather than silently ignore typos.
std::map<std::string, std::string> read_key_values(const std::string& path);

/// Fit configuration file using the documented option names (zbuf_scale,
/// splat_bdry_ignore, trg_splat_downsampling, compose_splat_wt,
/// indep_splat_wt, self_cons_wt, disp_smoothness_wt, n_layers, ...). Starts
/// from defaults; throws on unknown keys or unparsable values.
FitConfig fit_config_from_file(const std::string& path);
FitConfig fit_config_from_map(const std::map<std::string, std::string>& kv);

/// Loss-trace CSV: header "iteration,vs,mvs,sc,inc,sm,total" + one row per
/// logged iteration.
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

/// Metrics CSV (schema line "# ldikit-eval 1"); the dis-occlusion column is
/// empty when no view had a dis-occluded pixel.
void write_eval_csv(const std::string& path, const EvalReport& report);

/// Dataset bundle on disk: scene.txt, cameras.txt, source + per-view target
/// images (PNG for viewing, raw floats for computation), half-resolution
/// targets for the view-synthesis losses, exact dis-occlusion masks, and the
/// ground-truth LDI.
struct Bundle {
  Scene scene;
  CameraRig rig;
  Image source;                     // full resolution
  std::vector<Image> targets_small;  // at the render resolution
};

void write_bundle(const std::string& dir, const Scene& scene, const CameraRig& rig,
                  double target_downsampling);
Bundle read_bundle(const std::string& dir);

std::string format_g17(double v);

}  // namespace ldikit
