#pragma once

#include <cstdint>
#include <string>

namespace lfdeblur {

struct Vec2i {
  int r = 0;
  int c = 0;

  friend bool operator==(const Vec2i&, const Vec2i&) = default;
  Vec2i operator+(const Vec2i& o) const { return {r + o.r, c + o.c}; }
  Vec2i operator-(const Vec2i& o) const { return {r - o.r, c - o.c}; }
};

struct Vec2d {
  double r = 0.0;
  double c = 0.0;
};

enum class Layout { rectangular, hexagonal };
enum class Domain { sensor, texture };

/// Grid geometry tying sensor pixels, microlens blocks, and texture samples
/// together. A hexagonal array is handled as a rectangular super-block of
/// Q'xQ pixels holding two staggered microlens rows, so block arithmetic is
/// the same for both layouts; the staggering only matters to PSF synthesis.
struct LatticeSpec {
  Layout layout = Layout::rectangular;
  Vec2i pixels_per_block{1, 1};         // (J,J) or (Q',Q)
  Vec2i texture_units_per_block{1, 1};  // (D,D) or (B',B)
  Vec2i sensor_extent{0, 0};
  Vec2i texture_extent{0, 0};

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

  void validate() const;  // throws ValidationError

  Vec2i block_count() const;
  Vec2i block_dims(Domain d) const {
    return d == Domain::sensor ? pixels_per_block : texture_units_per_block;
  }

  /// Microlens centers per block, in block-relative units in [0,1)^2.
  int lenses_per_block() const { return layout == Layout::hexagonal ? 2 : 1; }
  Vec2d lens_center(int which) const;
};

struct BlockIndex {
  Vec2i block;
  Vec2i offset;

  friend bool operator==(const BlockIndex&, const BlockIndex&) = default;
};

/// Splits a grid coordinate into (block, offset). Total over all integers:
/// negative coordinates use floor division so boundary blocks from
/// convolution padding decompose cleanly.
BlockIndex decompose(Vec2i coord, const LatticeSpec& spec, Domain domain);

/// Inverse of decompose.
Vec2i compose(const BlockIndex& idx, const LatticeSpec& spec, Domain domain);

/// Physical parameters of the plenoptic camera plus the assumed scene depth.
/// All lengths in meters.
struct CameraConfig {
  double main_lens_focal_length = 0.0;
  double f_number = 0.0;  // may be +inf for the pinhole limit
  double pixel_size = 0.0;
  double microlens_spacing = 0.0;
  double lens_to_mla_distance = 0.0;
  double mla_to_sensor_distance = 0.0;
  double microlens_focal_length = 0.0;
  double scene_depth = 0.0;

  void validate() const;  // throws ValidationError
};

/// FNV-1a hash over the camera parameters and lattice geometry; used as the
/// PSF bank cache key.
std::uint64_t camera_hash(const CameraConfig& cam, const LatticeSpec& spec);

std::string layout_name(Layout l);
Layout layout_from_name(const std::string& name);

}  // namespace lfdeblur
