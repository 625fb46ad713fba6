#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfdeblur/deblur.hpp"
#include "lfdeblur/forward.hpp"
#include "lfdeblur/geometry.hpp"

namespace lfdeblur {

/// Sectioned key-value configuration text:
///   [camera]
///   f_number = 2.049
///   # comment
/// Values are free-form strings; typed getters parse on access.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::string get_str(const std::string& section, const std::string& key) const;
  double get_num(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key) const;
  Vec2i get_vec2i(const std::string& section, const std::string& key) const;
  std::vector<double> get_nums(const std::string& section, const std::string& key) const;

  template <typename T>
  T get_or(const std::string& section, const std::string& key, T fallback) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

template <>
double ConfigFile::get_or(const std::string&, const std::string&, double) const;
template <>
int ConfigFile::get_or(const std::string&, const std::string&, int) const;
template <>
std::string ConfigFile::get_or(const std::string&, const std::string&, std::string) const;
template <>
Vec2i ConfigFile::get_or(const std::string&, const std::string&, Vec2i) const;

/// Everything the CLI reads from one configuration file.
struct RunConfig {
  CameraConfig camera;
  LatticeSpec lattice;
  DeblurConfig deblur;
  Vec2i patch_grid{1, 1};

  AffineWarp warp = kIdentityWarp;
  Vec2d radial_center{-1, -1};  // negative -> texture centre
  double radial_k1 = 0.0;
  double radial_k2 = 0.0;
  std::string white_path;  // optional image paths
  std::string mask_path;

  struct Bench {
    std::vector<double> noise_levels{0.0, 2.5, 5.0};
    std::vector<std::string> textures{"bricks", "blobs", "strokes"};
    std::vector<std::string> kernels{"line9", "diag11", "curve13", "zigzag11"};
    std::uint64_t seed = 1234;
    int max_shift = 8;
  } bench;
};

CameraConfig camera_from_config(const ConfigFile& cfg);
LatticeSpec lattice_from_config(const ConfigFile& cfg);
DeblurConfig deblur_from_config(const ConfigFile& cfg);
RunConfig run_config_from(const ConfigFile& cfg);

/// Builds the CorrectionSet for the lattice: warp/radial parameters from the
/// config, mask/white loaded from the referenced files when present.
CorrectionSet corrections_from(const RunConfig& rc);

std::string write_config(const RunConfig& rc);

}  // namespace lfdeblur
