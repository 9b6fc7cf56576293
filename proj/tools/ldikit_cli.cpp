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

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldikit/eval.hpp"
#include "ldikit/fitter.hpp"
#include "ldikit/gradcheck.hpp"
#include "ldikit/io.hpp"
#include "ldikit/scene.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct SizeArg {
  int width = 64;
  int height = 64;
};

SizeArg parse_size(const std::string& s) {
  SizeArg size;
  if (std::sscanf(s.c_str(), "%dx%d", &size.width, &size.height) != 2 || size.width < 4 ||
      size.height < 4) {
    throw CLI::ValidationError("--size", "expected WxH with W,H >= 4, got '" + s + "'");
  }
  return size;
}

int run_gen(std::uint64_t seed, int n_obj_min, int n_obj_max, int views, const std::string& size_s,
            const std::string& out_dir) {
  const SizeArg size = parse_size(size_s);
  const ldikit::Scene scene = ldikit::generate_scene(seed, n_obj_min, n_obj_max);

  ldikit::CameraRig rig;
  rig.source = ldikit::canonical_camera(size.width, size.height);
  ldikit::Rng rng(seed ^ 0xa5a5a5a5a5a5a5a5ull);
  const ldikit::ViewSampleRanges ranges;
  for (int i = 0; i < views; ++i) {
    rig.targets.push_back(ldikit::sample_perturbed_camera(rng, ranges, rig.source));
  }

  const ldikit::SplatConfig splat;
  ldikit::write_bundle(out_dir, scene, rig, splat.target_downsampling);
  std::printf("wrote bundle: %s (%zu sprites, %d views, %dx%d)\n", out_dir.c_str(),
              scene.sprites.size(), views, size.width, size.height);
  return kExitOk;
}

int run_render(const std::string& ldi_path, const std::string& camera_path,
               const std::string& config_path, const std::string& out_png, int layer,
               const std::string& out_raw) {
  const ldikit::Ldi ldi = ldikit::read_ldi(ldi_path);
  const ldikit::CameraRig rig = ldikit::read_cameras(camera_path);
  if (rig.targets.empty()) {
    throw std::runtime_error("render: camera file must contain at least one target");
  }
  ldikit::FitConfig cfg;
  if (!config_path.empty()) cfg = ldikit::fit_config_from_file(config_path);
  const ldikit::ViewTransform view = ldikit::make_view_transform(rig.source, rig.targets.front());
  const ldikit::Image img = ldikit::render(ldi, view, cfg.splat, layer);
  ldikit::write_png(out_png, img);
  if (!out_raw.empty()) ldikit::write_image_raw(out_raw, img);
  std::printf("rendered %dx%d -> %s\n", img.width(), img.height(), out_png.c_str());
  return kExitOk;
}

int run_fit(const std::string& bundle_dir, const std::string& config_path, int layers,
            const std::string& out_dir) {
  const ldikit::Bundle bundle = ldikit::read_bundle(bundle_dir);
  ldikit::FitConfig cfg;
  if (!config_path.empty()) cfg = ldikit::fit_config_from_file(config_path);
  cfg.layers = layers;

  std::vector<ldikit::ViewObservation> views;
  for (std::size_t i = 0; i < bundle.rig.targets.size(); ++i) {
    views.push_back({bundle.targets_small[i],
                     ldikit::make_view_transform(bundle.rig.source, bundle.rig.targets[i])});
  }

  ldikit::FitReport report = ldikit::fit(bundle.source, views, cfg);
  report.metrics = ldikit::evaluate_against_scene(report.final_ldi, bundle.scene,
                                                  bundle.rig.source, bundle.rig.targets, cfg.splat);
  report.has_metrics = true;

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
  ldikit::write_ldi(path("fitted.ldi"), report.final_ldi);
  ldikit::write_trace_csv(path("trace.csv"), report.trace);
  ldikit::write_eval_csv(path("metrics.csv"), report.metrics);
  {
    std::FILE* f = std::fopen(path("fit_report.txt").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write fit_report.txt");
    std::fprintf(f, "layers %d\niterations %d\nwall_seconds %.3f\n", cfg.layers, cfg.iterations,
                 report.wall_seconds);
    const ldikit::LossBreakdown& first = report.trace.front().losses;
    const ldikit::LossBreakdown& last = report.trace.back().losses;
    std::fprintf(f, "initial_vs %s\nfinal_vs %s\ninitial_total %s\nfinal_total %s\n",
                 ldikit::format_g17(first.vs).c_str(), ldikit::format_g17(last.vs).c_str(),
                 ldikit::format_g17(first.total).c_str(), ldikit::format_g17(last.total).c_str());
    std::fclose(f);
  }
  std::printf("fit done in %.1fs: vs %.5f -> %.5f, wrote %s\n", report.wall_seconds,
              report.trace.front().losses.vs, report.trace.back().losses.vs, out_dir.c_str());
  return kExitOk;
}

int run_eval(const std::string& pred_dir, const std::string& bundle_dir,
             const std::string& out_csv) {
  namespace fs = std::filesystem;
  const ldikit::Ldi pred = ldikit::read_ldi((fs::path(pred_dir) / "fitted.ldi").string());
  const ldikit::Scene scene =
      ldikit::read_scene((fs::path(bundle_dir) / "scene.txt").string());
  const ldikit::CameraRig rig =
      ldikit::read_cameras((fs::path(bundle_dir) / "cameras.txt").string());
  const ldikit::SplatConfig splat;
  const ldikit::EvalReport report =
      ldikit::evaluate_against_scene(pred, scene, rig.source, rig.targets, splat);
  ldikit::write_eval_csv(out_csv, report);
  std::printf("vs_all %.5f  vs_disocc %s  fg_depth %.5f  bg_depth %.5f\n", report.vs_error_all,
              report.disocc_defined ? ldikit::format_g17(report.vs_error_disocc).c_str() : "n/a",
              report.fg_depth_error, report.bg_depth_error);
  return kExitOk;
}

int run_gradcheck(const std::string& suite, std::uint64_t seed, bool full) {
  ldikit::GradcheckSuiteOptions options;
  options.seed = seed;
  if (full) options.probes_per_block = 1 << 30;  // every parameter
  ldikit::GradReport report;
  if (suite == "render") {
    report = ldikit::gradcheck_render(options);
  } else if (suite == "losses") {
    report = ldikit::gradcheck_losses(options);
  } else if (suite == "all") {
    report = ldikit::gradcheck_all(options);
  } else {
    throw std::runtime_error("gradcheck: unknown suite '" + suite + "'");
  }
  std::fputs(report.to_table().c_str(), stdout);
  return report.pass ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable layered-depth-image rendering and fitting toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic scene bundle");
  std::uint64_t gen_seed = 1;
  int n_obj_min = 1, n_obj_max = 3, gen_views = 8;
  std::string gen_size = "64x64", gen_out;
  gen->add_option("--seed", gen_seed, "scene seed");
  gen->add_option("--n-obj-min", n_obj_min, "minimum sprite count")->check(CLI::Range(1, 4));
  gen->add_option("--n-obj-max", n_obj_max, "maximum sprite count")->check(CLI::Range(1, 4));
  gen->add_option("--views", gen_views, "number of target views")->check(CLI::Range(1, 512));
  gen->add_option("--size", gen_size, "image size WxH (default 64x64)");
  gen->add_option("--out", gen_out, "output bundle directory")->required();

  // render
  auto* render_cmd = app.add_subcommand("render", "render an LDI from a camera file");
  std::string render_ldi, render_camera, render_config, render_out, render_raw;
  int render_layer = ldikit::kAllLayers;
  render_cmd->add_option("--ldi", render_ldi, "LDI container file")->required();
  render_cmd->add_option("--camera", render_camera, "cameras file (renders its first target)")
      ->required();
  render_cmd->add_option("--config", render_config, "key=value config file");
  render_cmd->add_option("--out", render_out, "output PNG")->required();
  render_cmd->add_option("--layer", render_layer, "render a single layer (default: all)");
  render_cmd->add_option("--raw-out", render_raw, "also write the raw float image");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit an LDI to a bundle");
  std::string fit_bundle, fit_config, fit_out;
  int fit_layers = 2;
  fit_cmd->add_option("--bundle", fit_bundle, "bundle directory from gen")->required();
  fit_cmd->add_option("--config", fit_config, "key=value config file");
  fit_cmd->add_option("--layers", fit_layers, "model layers")->check(CLI::Range(1, 2));
  fit_cmd->add_option("--out", fit_out, "output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a fit against ground truth");
  std::string eval_pred, eval_bundle, eval_out;
  eval_cmd->add_option("--pred", eval_pred, "fit output directory")->required();
  eval_cmd->add_option("--bundle", eval_bundle, "bundle directory")->required();
  eval_cmd->add_option("--out", eval_out, "output CSV")->required();

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "audit analytic gradients against the oracle");
  std::string grad_suite = "all";
  std::uint64_t grad_seed = 1;
  bool grad_full = false;
  grad_cmd->add_option("--suite", grad_suite, "render | losses | all")
      ->check(CLI::IsMember({"render", "losses", "all"}));
  grad_cmd->add_option("--seed", grad_seed, "probe seed");
  grad_cmd->add_flag("--full", grad_full, "probe every parameter");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(gen_seed, n_obj_min, n_obj_max, gen_views, gen_size, gen_out);
    if (render_cmd->parsed()) {
      return run_render(render_ldi, render_camera, render_config, render_out, render_layer,
                        render_raw);
    }
    if (fit_cmd->parsed()) return run_fit(fit_bundle, fit_config, fit_layers, fit_out);
    if (eval_cmd->parsed()) return run_eval(eval_pred, eval_bundle, eval_out);
    if (grad_cmd->parsed()) return run_gradcheck(grad_suite, grad_seed, grad_full);
  } catch (const ldikit::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
