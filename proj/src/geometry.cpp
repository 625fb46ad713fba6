#include "lfdeblur/geometry.hpp"

#include <cmath>
#include <cstring>

#include "lfdeblur/errors.hpp"

namespace lfdeblur {

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

void LatticeSpec::validate() const {
  require(pixels_per_block.r >= 1 && pixels_per_block.c >= 1,
          "LatticeSpec: pixels_per_block must be >= 1");
  require(texture_units_per_block.r >= 1 && texture_units_per_block.c >= 1,
          "LatticeSpec: texture_units_per_block must be >= 1");
  require(sensor_extent.r >= 1 && sensor_extent.c >= 1, "LatticeSpec: empty sensor extent");
  require(texture_extent.r >= 1 && texture_extent.c >= 1, "LatticeSpec: empty texture extent");
  require(sensor_extent.r % pixels_per_block.r == 0 && sensor_extent.c % pixels_per_block.c == 0,
          "LatticeSpec: sensor extent not divisible into whole blocks");
  require(texture_extent.r % texture_units_per_block.r == 0 &&
              texture_extent.c % texture_units_per_block.c == 0,
          "LatticeSpec: texture extent not divisible into whole blocks");
  require(sensor_extent.r / pixels_per_block.r == texture_extent.r / texture_units_per_block.r &&
              sensor_extent.c / pixels_per_block.c == texture_extent.c / texture_units_per_block.c,
          "LatticeSpec: sensor and texture extents cover different block counts");
}

Vec2i LatticeSpec::block_count() const {
  return {sensor_extent.r / pixels_per_block.r, sensor_extent.c / pixels_per_block.c};
}

Vec2d LatticeSpec::lens_center(int which) const {
  if (layout == Layout::rectangular) return {0.5, 0.5};
  return which == 0 ? Vec2d{0.25, 0.25} : Vec2d{0.75, 0.75};
}

BlockIndex decompose(Vec2i coord, const LatticeSpec& spec, Domain domain) {
  const Vec2i dims = spec.block_dims(domain);
  const Vec2i block{floor_div(coord.r, dims.r), floor_div(coord.c, dims.c)};
  return {block, {coord.r - block.r * dims.r, coord.c - block.c * dims.c}};
}

Vec2i compose(const BlockIndex& idx, const LatticeSpec& spec, Domain domain) {
  const Vec2i dims = spec.block_dims(domain);
  return {idx.block.r * dims.r + idx.offset.r, idx.block.c * dims.c + idx.offset.c};
}

void CameraConfig::validate() const {
  require(main_lens_focal_length > 0, "CameraConfig: main lens focal length must be > 0");
  require(f_number > 0, "CameraConfig: f-number must be > 0");
  require(pixel_size > 0, "CameraConfig: pixel size must be > 0");
  require(microlens_spacing > 0, "CameraConfig: microlens spacing must be > 0");
  require(lens_to_mla_distance > 0, "CameraConfig: lens to MLA distance must be > 0");
  require(mla_to_sensor_distance > 0, "CameraConfig: MLA to sensor distance must be > 0");
  require(microlens_focal_length > 0, "CameraConfig: microlens focal length must be > 0");
  require(scene_depth > 0, "CameraConfig: scene depth must be > 0");
}

namespace {

void hash_bytes(std::uint64_t& h, const void* p, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_double(std::uint64_t& h, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  hash_bytes(h, &bits, sizeof bits);
}

void hash_int(std::uint64_t& h, int x) { hash_bytes(h, &x, sizeof x); }

}  // namespace

std::uint64_t camera_hash(const CameraConfig& cam, const LatticeSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_double(h, cam.main_lens_focal_length);
  hash_double(h, cam.f_number);
  hash_double(h, cam.pixel_size);
  hash_double(h, cam.microlens_spacing);
  hash_double(h, cam.lens_to_mla_distance);
  hash_double(h, cam.mla_to_sensor_distance);
  hash_double(h, cam.microlens_focal_length);
  hash_double(h, cam.scene_depth);
  hash_int(h, static_cast<int>(spec.layout));
  hash_int(h, spec.pixels_per_block.r);
  hash_int(h, spec.pixels_per_block.c);
  hash_int(h, spec.texture_units_per_block.r);
  hash_int(h, spec.texture_units_per_block.c);
  return h;
}

std::string layout_name(Layout l) {
  return l == Layout::rectangular ? "rectangular" : "hexagonal";
}

Layout layout_from_name(const std::string& name) {
  if (name == "rectangular") return Layout::rectangular;
  if (name == "hexagonal") return Layout::hexagonal;
  throw ValidationError("unknown layout: " + name);
}

}  // namespace lfdeblur
