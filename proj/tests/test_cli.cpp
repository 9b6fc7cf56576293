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

#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ldikit/eval.hpp"
#include "ldikit/io.hpp"
#include "ldikit/scene.hpp"

using namespace ldikit;
namespace fs = std::filesystem;

namespace {

struct CliFixture {
  fs::path root;
  CliFixture() {
    root = fs::temp_directory_path() / ("ldikit_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~CliFixture() { fs::remove_all(root); }

  std::string path(const std::string& name) const { return (root / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(LDIKIT_CLI_PATH) + " " + args + " > " +
                            path("last.log") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

}  // namespace

TEST_CASE("CLI pipeline: gen, render, fit, eval, gradcheck") {
  CliFixture cli;

  // gen
  REQUIRE(cli.run("gen --seed 12 --n-obj-min 1 --n-obj-max 2 --views 3 --size 16x16 --out " +
                  cli.path("bundle")) == 0);
  REQUIRE(fs::exists(cli.root / "bundle" / "gt_ldi.bin"));

  // An identity camera file: render the ground truth back at the source view.
  {
    const CameraRig rig = read_cameras(cli.path("bundle/cameras.txt"));
    CameraRig identity;
    identity.source = rig.source;
    identity.targets.push_back(rig.source);
    write_cameras(cli.path("identity_cameras.txt"), identity);
    std::ofstream cfg(cli.path("fullres.cfg"));
    cfg << "trg_splat_downsampling = 1\n";
  }
  REQUIRE(cli.run("render --ldi " + cli.path("bundle/gt_ldi.bin") + " --camera " +
                  cli.path("identity_cameras.txt") + " --config " + cli.path("fullres.cfg") +
                  " --layer 0 --out " + cli.path("identity.png") + " --raw-out " +
                  cli.path("identity.raw")) == 0);
  {
    // Layer 0 at the source camera is the visible surface: the raycast source.
    const Image rendered = read_image_raw(cli.path("identity.raw"));
    const Image source = read_image_raw(cli.path("bundle/source.raw"));
    CHECK(max_abs_difference(rendered, source) < 1e-6);
  }

  // fit (tiny budget; this is a plumbing test, convergence is acceptance's job)
  {
    std::ofstream cfg(cli.path("fit.cfg"));
    cfg << "iterations = 40\nlog_every = 10\nseed = 4\n";
  }
  REQUIRE(cli.run("fit --bundle " + cli.path("bundle") + " --config " + cli.path("fit.cfg") +
                  " --layers 2 --out " + cli.path("fit2")) == 0);
  CHECK(fs::exists(cli.root / "fit2" / "fitted.ldi"));
  CHECK(fs::exists(cli.root / "fit2" / "trace.csv"));
  CHECK(fs::exists(cli.root / "fit2" / "metrics.csv"));

  // eval the fit, then eval the ground truth passed off as a prediction
  REQUIRE(cli.run("eval --pred " + cli.path("fit2") + " --bundle " + cli.path("bundle") +
                  " --out " + cli.path("fit2_eval.csv")) == 0);
  {
    std::ifstream in(cli.path("fit2_eval.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "# ldikit-eval 1");
    std::getline(in, line);
    CHECK(line == "vs_error_all,vs_error_disocc,fg_depth_error,bg_depth_error");
  }
  fs::create_directories(cli.root / "gt_as_pred");
  fs::copy_file(cli.root / "bundle" / "gt_ldi.bin", cli.root / "gt_as_pred" / "fitted.ldi");
  REQUIRE(cli.run("eval --pred " + cli.path("gt_as_pred") + " --bundle " + cli.path("bundle") +
                  " --out " + cli.path("gt_eval.csv")) == 0);
  {
    // Depth errors of the ground truth against itself: zero up to the float32
    // storage quantization of the container.
    const Ldi pred = read_ldi(cli.path("gt_as_pred/fitted.ldi"));
    const Scene scene = read_scene(cli.path("bundle/scene.txt"));
    const CameraRig rig = read_cameras(cli.path("bundle/cameras.txt"));
    const EvalReport report =
        evaluate_against_scene(pred, scene, rig.source, rig.targets, SplatConfig{});
    CHECK(report.fg_depth_error < 1e-6);
    CHECK(report.bg_depth_error < 1e-6);
  }

  // gradcheck (trimmed by seed choice; the full audit runs in acceptance A1)
  CHECK(cli.run("gradcheck --suite render --seed 2") == 0);

  // validation failures exit 1 with a diagnostic
  CHECK(cli.run("fit --bundle " + cli.path("missing_dir") + " --out " + cli.path("x")) == 1);
  CHECK(cli.run("render --ldi " + cli.path("nope.ldi") + " --camera " +
                cli.path("identity_cameras.txt") + " --out " + cli.path("n.png")) == 1);
  CHECK(cli.run("gen --seed 1 --n-obj-min 3 --n-obj-max 1 --out " + cli.path("bad")) != 0);
}
