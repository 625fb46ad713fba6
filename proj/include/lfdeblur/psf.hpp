#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfdeblur/geometry.hpp"
#include "lfdeblur/raster.hpp"

namespace lfdeblur {

/// Motion blur kernel on the texture grid. Feasible kernels are nonnegative
/// with unit sum; `center` is the grid cell corresponding to zero displacement.
struct MotionKernel {
  Raster weights;
  Vec2i center;

  static MotionKernel delta(Vec2i extent);
  Vec2i extent() const { return {weights.rows(), weights.cols()}; }
};

/// Clamps negatives to zero and rescales to unit sum. Feasible kernels pass
/// through unchanged, which also makes the projection exactly idempotent.
/// Throws DegenerateKernelError when no positive mass remains.
MotionKernel project_kernel(const MotionKernel& k);

bool kernel_feasible(const MotionKernel& k, double sum_tol = 1e-12);

/// Physical pitches of the model grids. The model sensor grid is ideal: a
/// block spans exactly pixels_per_block pixels, so one microlens pitch maps
/// to a whole number of pixels and the PSF is block-periodic by construction.
/// (The physical pixel size enters only through the alignment warp.)
struct PhysicalLayout {
  Vec2d block_size;        // meters per block, (rows, cols)
  Vec2d pixel_pitch;       // block_size / pixels_per_block
  Vec2d texel_pitch;       // block_size / texture_units_per_block
  double aperture_radius;  // microlens aperture radius, meters
};

PhysicalLayout physical_layout(const CameraConfig& cam, const LatticeSpec& spec);

/// Thin-lens constants shared by every microlens at the assumed scene depth.
struct PsfOptics {
  double main_image_dist;   // v: image distance behind the main lens
  double object_dist;       // o = d1 - v: main image distance in front of the MLA
  double inv_image_dist;    // kappa = 1/f_u - 1/o for each microlens
  double spread_scale;      // s = 1 - d2*kappa: aperture-to-sensor scaling
  double chief_ray_mag;     // v/d1: lateral magnification MLA plane -> main image
  double main_disc_radius;  // radius of the main-lens blur disc on the MLA plane
  bool pinhole;             // true when the aperture is closed (f_number = inf)
};

PsfOptics derive_optics(const CameraConfig& cam);

struct PsfBuildOptions {
  int supersample = 8;        // quadrature columns per pixel per axis
  int max_support_radius = 8; // blocks; exceeding this raises SupportOverflowError
};

/// Bank of per-(view offset j, texture offset t) light-field PSF kernels over
/// the relative sensor-block index. Kernels are nonnegative and each texture
/// offset carries unit total flux across all views and blocks.
class PsfBank {
 public:
  PsfBank() = default;
  PsfBank(LatticeSpec spec, CameraConfig camera, int support_radius);

  const LatticeSpec& spec() const { return spec_; }
  const CameraConfig& camera() const { return camera_; }
  int support_radius() const { return support_radius_; }
  std::uint64_t cache_key() const { return camera_hash(camera_, spec_); }

  int view_count() const { return spec_.pixels_per_block.r * spec_.pixels_per_block.c; }
  int phase_count() const {
    return spec_.texture_units_per_block.r * spec_.texture_units_per_block.c;
  }
  int kernel_side() const { return 2 * support_radius_ + 1; }

  Raster& kernel(Vec2i j, Vec2i t);
  const Raster& kernel(Vec2i j, Vec2i t) const;

  struct Tap {
    int dr, dc;
    double w;
  };
  const std::vector<Tap>& taps(Vec2i j, Vec2i t) const;

  /// Sum over all (j, block) entries for texture offset t; 1 for a valid bank.
  double flux(Vec2i t) const;

  /// Drops zero entries into per-kernel tap lists. Called by the builder and
  /// the loader; required before taps() is used.
  void rebuild_taps();

 private:
  int kernel_index(Vec2i j, Vec2i t) const;

  LatticeSpec spec_;
  CameraConfig camera_;
  int support_radius_ = 0;
  std::vector<Raster> kernels_;
  std::vector<std::vector<Tap>> taps_;
};

/// Builds the PSF bank from the blur-disc geometry: a texture sample spreads
/// over the main-lens blur disc on the MLA plane; each microlens re-images
/// the illuminated part of its aperture onto the sensor. Weights are computed
/// by supersampled rasterization of the resulting disc intersections and
/// normalized to unit flux per texture offset.
PsfBank build_psf_bank(const CameraConfig& cam, const LatticeSpec& spec,
                       const PsfBuildOptions& opts = {});

/// Dense PSF entry h(x, p) reconstructed from the bank via block periodicity.
/// Out-of-support pairs return 0.
double eval_psf(const PsfBank& bank, Vec2i x, Vec2i p);

void save_psf_bank(const PsfBank& bank, const std::string& path);
PsfBank load_psf_bank(const std::string& path);

}  // namespace lfdeblur
