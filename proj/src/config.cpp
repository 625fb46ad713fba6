#include "lfdeblur/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lfdeblur/errors.hpp"
#include "lfdeblur/image_io.hpp"

namespace lfdeblur {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& s, const std::string& where) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    throw ValidationError("config: bad number '" + s + "' for " + where);
  }
  if (pos != s.size()) throw ValidationError("config: bad number '" + s + "' for " + where);
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw ValidationError("config: missing [" + section + "] " + key);
  return s->second.at(key);
}

double ConfigFile::get_num(const std::string& section, const std::string& key) const {
  return parse_num(get_str(section, key), "[" + section + "] " + key);
}

int ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const double v = get_num(section, key);
  const int i = static_cast<int>(v);
  if (i != v) throw ValidationError("config: [" + section + "] " + key + " must be an integer");
  return i;
}

Vec2i ConfigFile::get_vec2i(const std::string& section, const std::string& key) const {
  const auto nums = get_nums(section, key);
  if (nums.size() != 2)
    throw ValidationError("config: [" + section + "] " + key + " needs two integers");
  return {static_cast<int>(nums[0]), static_cast<int>(nums[1])};
}

std::vector<double> ConfigFile::get_nums(const std::string& section,
                                         const std::string& key) const {
  std::istringstream is(get_str(section, key));
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_num(tok, "[" + section + "] " + key));
  return out;
}

template <>
double ConfigFile::get_or(const std::string& s, const std::string& k, double fb) const {
  return has(s, k) ? get_num(s, k) : fb;
}
template <>
int ConfigFile::get_or(const std::string& s, const std::string& k, int fb) const {
  return has(s, k) ? get_int(s, k) : fb;
}
template <>
std::string ConfigFile::get_or(const std::string& s, const std::string& k,
                               std::string fb) const {
  return has(s, k) ? get_str(s, k) : fb;
}
template <>
Vec2i ConfigFile::get_or(const std::string& s, const std::string& k, Vec2i fb) const {
  return has(s, k) ? get_vec2i(s, k) : fb;
}

CameraConfig camera_from_config(const ConfigFile& cfg) {
  CameraConfig cam;
  cam.main_lens_focal_length = cfg.get_num("camera", "main_lens_focal_length");
  cam.f_number = cfg.get_num("camera", "f_number");
  cam.pixel_size = cfg.get_num("camera", "pixel_size");
  cam.microlens_spacing = cfg.get_num("camera", "microlens_spacing");
  cam.lens_to_mla_distance = cfg.get_num("camera", "lens_to_mla_distance");
  cam.mla_to_sensor_distance = cfg.get_num("camera", "mla_to_sensor_distance");
  cam.microlens_focal_length = cfg.get_num("camera", "microlens_focal_length");
  cam.scene_depth = cfg.get_num("camera", "scene_depth");
  cam.validate();
  return cam;
}

LatticeSpec lattice_from_config(const ConfigFile& cfg) {
  LatticeSpec spec;
  spec.layout = layout_from_name(cfg.get_or<std::string>("lattice", "layout", "rectangular"));
  spec.pixels_per_block = cfg.get_vec2i("lattice", "pixels_per_block");
  spec.texture_units_per_block = cfg.get_vec2i("lattice", "texture_units_per_block");
  spec.sensor_extent = cfg.get_vec2i("lattice", "sensor_extent");
  spec.texture_extent = cfg.get_vec2i("lattice", "texture_extent");
  spec.validate();
  return spec;
}

DeblurConfig deblur_from_config(const ConfigFile& cfg) {
  DeblurConfig d;
  d.lambda_alt = cfg.get_or("deblur", "lambda_alt", d.lambda_alt);
  d.lambda_final = cfg.get_or("deblur", "lambda_final", d.lambda_final);
  d.lambda_patch = cfg.get_or("deblur", "lambda_patch", d.lambda_patch);
  d.step = cfg.get_or("deblur", "step", d.step);
  d.iters_per_level = cfg.get_or("deblur", "iters_per_level", d.iters_per_level);
  d.pyramid_levels = cfg.get_or("deblur", "pyramid_levels", d.pyramid_levels);
  d.kernel_extent = cfg.get_or("deblur", "kernel_extent", d.kernel_extent);
  d.tv_epsilon = cfg.get_or("deblur", "tv_epsilon", d.tv_epsilon);
  d.validate();
  return d;
}

RunConfig run_config_from(const ConfigFile& cfg) {
  RunConfig rc;
  rc.camera = camera_from_config(cfg);
  rc.lattice = lattice_from_config(cfg);
  rc.deblur = deblur_from_config(cfg);
  rc.patch_grid = cfg.get_or("deblur", "patch_grid", Vec2i{1, 1});

  if (cfg.has("corrections", "warp")) {
    const auto w = cfg.get_nums("corrections", "warp");
    if (w.size() != 6)
      throw ValidationError("config: [corrections] warp needs 6 numbers (2x3 row-major)");
    for (int i = 0; i < 6; ++i) rc.warp[i] = w[i];
  }
  if (cfg.has("corrections", "radial_center")) {
    const auto c = cfg.get_nums("corrections", "radial_center");
    if (c.size() != 2) throw ValidationError("config: [corrections] radial_center needs 2 numbers");
    rc.radial_center = {c[0], c[1]};
  }
  rc.radial_k1 = cfg.get_or("corrections", "radial_k1", 0.0);
  rc.radial_k2 = cfg.get_or("corrections", "radial_k2", 0.0);
  rc.white_path = cfg.get_or<std::string>("corrections", "white", "");
  rc.mask_path = cfg.get_or<std::string>("corrections", "mask", "");

  if (cfg.has("bench", "noise_levels")) rc.bench.noise_levels = cfg.get_nums("bench", "noise_levels");
  if (cfg.has("bench", "seed")) rc.bench.seed = static_cast<std::uint64_t>(cfg.get_num("bench", "seed"));
  rc.bench.max_shift = cfg.get_or("bench", "max_shift", rc.bench.max_shift);
  auto parse_list = [&](const std::string& key, std::vector<std::string>& into) {
    if (!cfg.has("bench", key)) return;
    std::istringstream is(cfg.get_str("bench", key));
    into.clear();
    std::string tok;
    while (is >> tok) into.push_back(tok);
  };
  parse_list("textures", rc.bench.textures);
  parse_list("kernels", rc.bench.kernels);
  return rc;
}

CorrectionSet corrections_from(const RunConfig& rc) {
  CorrectionSet corr = CorrectionSet::identity(rc.lattice);
  corr.warp = rc.warp;
  if (rc.radial_center.r >= 0 && rc.radial_center.c >= 0) corr.radial_center = rc.radial_center;
  corr.kappa1 = rc.radial_k1;
  corr.kappa2 = rc.radial_k2;
  if (!rc.mask_path.empty()) corr.mask = load_mask_png(rc.mask_path);
  if (!rc.white_path.empty()) corr.white = load_image(rc.white_path);
  corr.validate(rc.lattice);
  return corr;
}

std::string write_config(const RunConfig& rc) {
  std::ostringstream os;
  os.precision(17);
  os << "[camera]\n";
  os << "main_lens_focal_length = " << rc.camera.main_lens_focal_length << "\n";
  os << "f_number = " << rc.camera.f_number << "\n";
  os << "pixel_size = " << rc.camera.pixel_size << "\n";
  os << "microlens_spacing = " << rc.camera.microlens_spacing << "\n";
  os << "lens_to_mla_distance = " << rc.camera.lens_to_mla_distance << "\n";
  os << "mla_to_sensor_distance = " << rc.camera.mla_to_sensor_distance << "\n";
  os << "microlens_focal_length = " << rc.camera.microlens_focal_length << "\n";
  os << "scene_depth = " << rc.camera.scene_depth << "\n\n";
  os << "[lattice]\n";
  os << "layout = " << layout_name(rc.lattice.layout) << "\n";
  os << "pixels_per_block = " << rc.lattice.pixels_per_block.r << " "
     << rc.lattice.pixels_per_block.c << "\n";
  os << "texture_units_per_block = " << rc.lattice.texture_units_per_block.r << " "
     << rc.lattice.texture_units_per_block.c << "\n";
  os << "sensor_extent = " << rc.lattice.sensor_extent.r << " " << rc.lattice.sensor_extent.c
     << "\n";
  os << "texture_extent = " << rc.lattice.texture_extent.r << " " << rc.lattice.texture_extent.c
     << "\n\n";
  os << "[deblur]\n";
  os << "lambda_alt = " << rc.deblur.lambda_alt << "\n";
  os << "lambda_final = " << rc.deblur.lambda_final << "\n";
  os << "lambda_patch = " << rc.deblur.lambda_patch << "\n";
  os << "step = " << rc.deblur.step << "\n";
  os << "iters_per_level = " << rc.deblur.iters_per_level << "\n";
  os << "pyramid_levels = " << rc.deblur.pyramid_levels << "\n";
  os << "kernel_extent = " << rc.deblur.kernel_extent.r << " " << rc.deblur.kernel_extent.c
     << "\n";
  os << "tv_epsilon = " << rc.deblur.tv_epsilon << "\n";
  os << "patch_grid = " << rc.patch_grid.r << " " << rc.patch_grid.c << "\n\n";
  os << "[corrections]\n";
  os << "warp =";
  for (double v : rc.warp) os << " " << v;
  os << "\n";
  os << "radial_k1 = " << rc.radial_k1 << "\n";
  os << "radial_k2 = " << rc.radial_k2 << "\n";
  if (rc.radial_center.r >= 0)
    os << "radial_center = " << rc.radial_center.r << " " << rc.radial_center.c << "\n";
  if (!rc.white_path.empty()) os << "white = " << rc.white_path << "\n";
  if (!rc.mask_path.empty()) os << "mask = " << rc.mask_path << "\n";
  return os.str();
}

}  // namespace lfdeblur
