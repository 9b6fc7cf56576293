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

#include "ldikit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ldikit {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

void write_f32_le(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(bits & 0xff), static_cast<unsigned char>((bits >> 8) & 0xff),
      static_cast<unsigned char>((bits >> 16) & 0xff),
      static_cast<unsigned char>((bits >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

double read_f32_le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw std::runtime_error("unexpected end of float payload");
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                             (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  float f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

// ---- PNG ---------------------------------------------------------------

std::uint32_t crc32_update(std::uint32_t crc, const unsigned char* data, std::size_t n) {
  static std::uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc;
}

void put_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_begin = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = crc32_update(0xffffffffu, out.data() + crc_begin, out.size() - crc_begin);
  put_u32_be(out, crc ^ 0xffffffffu);
}

}  // namespace

void write_png(const std::string& path, const Image& image) {
  if (image.empty()) throw std::invalid_argument("write_png: empty image");
  const int w = image.width(), h = image.height(), ch = image.channels();

  // Scanlines: filter byte 0 + interleaved samples.
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + static_cast<std::size_t>(w) * ch));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
        raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }

  // zlib stream with stored (uncompressed) deflate blocks: deterministic
  // output with no compressor dependency.
  std::vector<unsigned char> z;
  z.push_back(0x78);
  z.push_back(0x01);
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t n = std::min<std::size_t>(65535, raw.size() - pos);
    const bool final = pos + n == raw.size();
    z.push_back(final ? 1 : 0);
    z.push_back(static_cast<unsigned char>(n & 0xff));
    z.push_back(static_cast<unsigned char>((n >> 8) & 0xff));
    z.push_back(static_cast<unsigned char>(~n & 0xff));
    z.push_back(static_cast<unsigned char>((~n >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + n);
    pos += n;
  }
  std::uint32_t a = 1, b = 0;
  for (unsigned char byte : raw) {
    a = (a + byte) % 65521;
    b = (b + a) % 65521;
  }
  put_u32_be(z, (b << 16) | a);

  std::vector<unsigned char> png = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<unsigned char> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(w));
  put_u32_be(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);                                    // bit depth
  ihdr.push_back(ch == 3 ? 2 : 0);                      // color type
  ihdr.push_back(0);                                    // compression
  ihdr.push_back(0);                                    // filter
  ihdr.push_back(0);                                    // interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", z);
  append_chunk(png, "IEND", {});

  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
}

// ---- raw image / LDI containers -----------------------------------------

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_image_raw(const std::string& path, const Image& image) {
  if (image.empty()) throw std::invalid_argument("write_image_raw: empty image");
  auto out = open_out(path);
  out << "ldikit-image 1 " << image.width() << " " << image.height() << " " << image.channels()
      << "\n";
  for (double v : image.data()) write_f32_le(out, v);
}

Image read_image_raw(const std::string& path) {
  auto in = open_in(path);
  std::string magic;
  int version = 0, w = 0, h = 0, c = 0;
  in >> magic >> version >> w >> h >> c;
  if (magic != "ldikit-image" || version != 1) {
    throw std::runtime_error("bad image header in " + path);
  }
  in.ignore(1);  // newline
  Image img(w, h, c);
  for (double& v : img.data()) v = read_f32_le(in);
  return img;
}

void write_ldi(const std::string& path, const Ldi& ldi) {
  if (ldi.layers.empty()) throw std::invalid_argument("write_ldi: empty LDI");
  auto out = open_out(path);
  out << "ldikit-ldi 1 " << ldi.width() << " " << ldi.height() << " " << ldi.layer_count() << " "
      << format_g17(ldi.d_max) << "\n";
  for (const LdiLayer& layer : ldi.layers) {
    for (double v : layer.texture.data()) write_f32_le(out, v);
    for (double v : layer.disparity.data()) write_f32_le(out, v);
  }
}

Ldi read_ldi(const std::string& path) {
  auto in = open_in(path);
  std::string magic;
  int version = 0, w = 0, h = 0, layers = 0;
  double d_max = 0.0;
  in >> magic >> version >> w >> h >> layers >> d_max;
  if (magic != "ldikit-ldi" || version != 1 || layers < 1) {
    throw std::runtime_error("bad LDI header in " + path);
  }
  in.ignore(1);
  Ldi ldi;
  ldi.d_max = d_max;
  for (int l = 0; l < layers; ++l) {
    LdiLayer layer{Image(w, h, 3), Image(w, h, 1)};
    for (double& v : layer.texture.data()) v = read_f32_le(in);
    for (double& v : layer.disparity.data()) v = read_f32_le(in);
    ldi.layers.push_back(std::move(layer));
  }
  return ldi;
}

// ---- cameras --------------------------------------------------------------

namespace {

void write_camera_line(std::ostream& out, const char* tag, const Camera& cam) {
  out << tag << " " << cam.width << " " << cam.height;
  for (double v : {cam.intrinsics.fx, cam.intrinsics.fy, cam.intrinsics.cx, cam.intrinsics.cy}) {
    out << " " << format_g17(v);
  }
  for (double v : cam.world_from_camera.rotation.m) out << " " << format_g17(v);
  const Vec3& t = cam.world_from_camera.translation;
  for (double v : {t.x, t.y, t.z}) out << " " << format_g17(v);
  out << "\n";
}

Camera read_camera_fields(std::istringstream& line) {
  Camera cam;
  line >> cam.width >> cam.height >> cam.intrinsics.fx >> cam.intrinsics.fy >> cam.intrinsics.cx >>
      cam.intrinsics.cy;
  for (double& v : cam.world_from_camera.rotation.m) line >> v;
  line >> cam.world_from_camera.translation.x >> cam.world_from_camera.translation.y >>
      cam.world_from_camera.translation.z;
  if (!line) throw std::runtime_error("malformed camera line");
  return cam;
}

}  // namespace

void write_cameras(const std::string& path, const CameraRig& rig) {
  auto out = open_out(path);
  out << "ldikit-cameras 1\n";
  write_camera_line(out, "source", rig.source);
  for (const Camera& cam : rig.targets) write_camera_line(out, "target", cam);
}

CameraRig read_cameras(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  if (header != "ldikit-cameras 1") throw std::runtime_error("bad cameras header in " + path);
  CameraRig rig;
  bool have_source = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string tag;
    iss >> tag;
    if (tag == "source") {
      rig.source = read_camera_fields(iss);
      have_source = true;
    } else if (tag == "target") {
      rig.targets.push_back(read_camera_fields(iss));
    } else {
      throw std::runtime_error("unknown camera tag '" + tag + "' in " + path);
    }
  }
  if (!have_source) throw std::runtime_error("cameras file has no source camera: " + path);
  return rig;
}

// ---- scene ------------------------------------------------------------------

namespace {

void write_texture(std::ostream& out, const TextureParams& t) {
  out << " texture";
  for (double v : t.color_a) out << " " << format_g17(v);
  for (double v : t.color_b) out << " " << format_g17(v);
  for (double v : t.gradient_dir) out << " " << format_g17(v);
  out << " " << t.noise_seed << " " << format_g17(t.noise_amp) << " " << format_g17(t.noise_freq)
      << " " << t.octaves << " " << format_g17(t.stripe_amp) << " " << format_g17(t.stripe_freq)
      << " " << format_g17(t.stripe_phase);
  for (double v : t.stripe_dir) out << " " << format_g17(v);
}

TextureParams read_texture(std::istringstream& in) {
  std::string tag;
  in >> tag;
  if (tag != "texture") throw std::runtime_error("expected texture block, got '" + tag + "'");
  TextureParams t;
  for (double& v : t.color_a) in >> v;
  for (double& v : t.color_b) in >> v;
  for (double& v : t.gradient_dir) in >> v;
  in >> t.noise_seed >> t.noise_amp >> t.noise_freq >> t.octaves >> t.stripe_amp >>
      t.stripe_freq >> t.stripe_phase;
  for (double& v : t.stripe_dir) in >> v;
  if (!in) throw std::runtime_error("malformed texture block");
  return t;
}

}  // namespace

void write_scene(const std::string& path, const Scene& scene) {
  auto out = open_out(path);
  out << "ldikit-scene 1\n";
  out << "seed " << scene.rng_seed << "\n";
  out << "d_max " << format_g17(scene.d_max) << "\n";
  for (std::size_t i = 0; i < scene.room.size(); ++i) {
    const RoomPlane& p = scene.room[i];
    out << "room_plane " << i;
    for (double v : {p.origin.x, p.origin.y, p.origin.z, p.edge_u.x, p.edge_u.y, p.edge_u.z,
                     p.edge_v.x, p.edge_v.y, p.edge_v.z}) {
      out << " " << format_g17(v);
    }
    write_texture(out, p.texture);
    out << "\n";
  }
  for (std::size_t i = 0; i < scene.sprites.size(); ++i) {
    const SpritePlane& s = scene.sprites[i];
    out << "sprite " << i << " " << format_g17(s.z) << " " << format_g17(s.center_x) << " "
        << format_g17(s.width) << " " << format_g17(s.height) << " " << s.mask_resolution << " "
        << format_g17(s.blob_radius);
    for (double v : s.blob_center) out << " " << format_g17(v);
    for (double v : s.blob_amp) out << " " << format_g17(v);
    for (double v : s.blob_phase) out << " " << format_g17(v);
    write_texture(out, s.texture);
    out << "\n";
  }
}

Scene read_scene(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  if (header != "ldikit-scene 1") throw std::runtime_error("bad scene header in " + path);
  Scene scene;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string tag;
    iss >> tag;
    if (tag == "seed") {
      iss >> scene.rng_seed;
    } else if (tag == "d_max") {
      iss >> scene.d_max;
    } else if (tag == "room_plane") {
      std::size_t i = 0;
      iss >> i;
      if (i >= scene.room.size()) throw std::runtime_error("room plane index out of range");
      RoomPlane& p = scene.room[i];
      iss >> p.origin.x >> p.origin.y >> p.origin.z >> p.edge_u.x >> p.edge_u.y >> p.edge_u.z >>
          p.edge_v.x >> p.edge_v.y >> p.edge_v.z;
      p.texture = read_texture(iss);
    } else if (tag == "sprite") {
      std::size_t i = 0;
      iss >> i;
      SpritePlane s;
      iss >> s.z >> s.center_x >> s.width >> s.height >> s.mask_resolution >> s.blob_radius;
      for (double& v : s.blob_center) iss >> v;
      for (double& v : s.blob_amp) iss >> v;
      for (double& v : s.blob_phase) iss >> v;
      s.texture = read_texture(iss);
      scene.sprites.push_back(s);
    } else {
      throw std::runtime_error("unknown scene tag '" + tag + "' in " + path);
    }
    if (!iss) throw std::runtime_error("malformed scene line: " + line);
  }
  return scene;
}

// ---- config -----------------------------------------------------------------

std::map<std::string, std::string> read_key_values(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

FitConfig fit_config_from_map(const std::map<std::string, std::string>& kv) {
  FitConfig cfg;
  const auto to_double = [](const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
      throw std::runtime_error("config: cannot parse value for " + key + ": '" + value + "'");
    }
    return v;
  };
  for (const auto& [key, value] : kv) {
    if (key == "zbuf_scale") {
      cfg.splat.tau = 1.0 / to_double(key, value);
    } else if (key == "self_cons_zbuf_scale") {
      cfg.weights.tau_sc = 1.0 / to_double(key, value);
    } else if (key == "splat_bdry_ignore") {
      cfg.boundary_fraction = to_double(key, value);
    } else if (key == "trg_splat_downsampling") {
      cfg.splat.target_downsampling = to_double(key, value);
    } else if (key == "splat_epsilon") {
      cfg.splat.epsilon = to_double(key, value);
    } else if (key == "splat_white") {
      cfg.splat.white = to_double(key, value);
    } else if (key == "compose_splat_wt") {
      cfg.weights.vs = to_double(key, value);
    } else if (key == "indep_splat_wt") {
      cfg.weights.mvs = to_double(key, value);
    } else if (key == "self_cons_wt") {
      cfg.weights.sc = to_double(key, value);
    } else if (key == "disp_smoothness_wt") {
      cfg.weights.sm = to_double(key, value);
    } else if (key == "depth_ordering_wt") {
      cfg.weights.inc = to_double(key, value);
    } else if (key == "n_layers") {
      cfg.layers = static_cast<int>(to_double(key, value));
    } else if (key == "iterations") {
      cfg.iterations = static_cast<int>(to_double(key, value));
    } else if (key == "learning_rate") {
      cfg.learning_rate = to_double(key, value);
    } else if (key == "lr_decay") {
      if (value == "cosine") {
        cfg.lr_decay = FitConfig::LrDecay::cosine;
      } else if (value == "none") {
        cfg.lr_decay = FitConfig::LrDecay::none;
      } else {
        throw std::runtime_error("config: lr_decay must be 'cosine' or 'none'");
      }
    } else if (key == "beta1") {
      cfg.beta1 = to_double(key, value);
    } else if (key == "beta2") {
      cfg.beta2 = to_double(key, value);
    } else if (key == "adam_epsilon") {
      cfg.adam_epsilon = to_double(key, value);
    } else if (key == "d_min") {
      cfg.d_min = to_double(key, value);
    } else if (key == "d_max") {
      cfg.d_max = to_double(key, value);
    } else if (key == "init_mode") {
      if (value == "source") {
        cfg.init_mode = FitConfig::Init::source;
      } else if (value == "random") {
        cfg.init_mode = FitConfig::Init::random;
      } else {
        throw std::runtime_error("config: init_mode must be 'source' or 'random'");
      }
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "log_every") {
      cfg.log_every = static_cast<int>(to_double(key, value));
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  cfg.check();
  return cfg;
}

FitConfig fit_config_from_file(const std::string& path) {
  return fit_config_from_map(read_key_values(path));
}

// ---- CSV ----------------------------------------------------------------

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  auto out = open_out(path);
  out << "iteration,vs,mvs,sc,inc,sm,total\n";
  for (const TraceRow& row : trace) {
    out << row.iteration;
    for (double v : {row.losses.vs, row.losses.mvs, row.losses.sc, row.losses.inc, row.losses.sm,
                     row.losses.total}) {
      out << "," << format_g17(v);
    }
    out << "\n";
  }
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "# ldikit-eval 1\n";
  out << "vs_error_all,vs_error_disocc,fg_depth_error,bg_depth_error\n";
  out << format_g17(report.vs_error_all) << ","
      << (report.disocc_defined ? format_g17(report.vs_error_disocc) : std::string()) << ","
      << format_g17(report.fg_depth_error) << "," << format_g17(report.bg_depth_error) << "\n";
}

// ---- bundles -------------------------------------------------------------

namespace {

std::string view_name(const char* prefix, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03zu%s", prefix, i, ext);
  return buf;
}

}  // namespace

void write_bundle(const std::string& dir, const Scene& scene, const CameraRig& rig,
                  double target_downsampling) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  write_scene(path("scene.txt"), scene);
  write_cameras(path("cameras.txt"), rig);

  const Camera& src = rig.source;
  const RaycastResult source = raycast(scene, src, src.width, src.height);
  write_png(path("source.png"), source.color);
  write_image_raw(path("source.raw"), source.color);

  const GroundTruthLdi gt = ground_truth_ldi(scene, src, src.width, src.height);
  write_ldi(path("gt_ldi.bin"), gt.ldi);
  write_image_raw(path("gt_second_mask.raw"), gt.second_surface);

  for (std::size_t i = 0; i < rig.targets.size(); ++i) {
    const Camera& tgt = rig.targets[i];
    const RaycastResult full = raycast(scene, tgt, tgt.width, tgt.height);
    write_png(path(view_name("target", i, ".png")), full.color);
    write_image_raw(path(view_name("target", i, ".raw")), full.color);

    const Camera small = scale_camera(tgt, target_downsampling);
    const RaycastResult small_rc = raycast(scene, small, small.width, small.height);
    write_image_raw(path(view_name("target_small", i, ".raw")), small_rc.color);

    const Image disocc = disocclusion_mask(scene, src, small, small.width, small.height);
    write_png(path(view_name("disocc", i, ".png")), disocc);
    write_image_raw(path(view_name("disocc", i, ".raw")), disocc);
  }
}

Bundle read_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  Bundle bundle;
  bundle.scene = read_scene(path("scene.txt"));
  bundle.rig = read_cameras(path("cameras.txt"));
  bundle.source = read_image_raw(path("source.raw"));
  for (std::size_t i = 0; i < bundle.rig.targets.size(); ++i) {
    bundle.targets_small.push_back(read_image_raw(path(view_name("target_small", i, ".raw"))));
  }
  return bundle;
}

}  // namespace ldikit
