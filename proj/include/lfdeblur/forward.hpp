#pragma once

#include <array>
#include <vector>

#include "lfdeblur/geometry.hpp"
#include "lfdeblur/psf.hpp"
#include "lfdeblur/raster.hpp"

namespace lfdeblur {

/// Scene radiance on the texture grid, values in [0,1].
struct Texture {
  Raster values;
  LatticeSpec spec;
};

/// Raw-domain raster on the sensor grid.
struct LightFieldImage {
  Raster values;
  LatticeSpec spec;
};

Texture make_texture(Raster values, const LatticeSpec& spec);
LightFieldImage make_lf_image(Raster values, const LatticeSpec& spec);

/// Boundary rule for every convolution in the imaging chain. Mirror is the
/// pipeline default; zero is used by oracle comparisons and flux accounting.
enum class Boundary { mirror, zero };

/// g(p) = sum_q h_m(q) f(p - q) with the kernel's centre as zero displacement.
Texture motion_convolve(const Texture& f, const MotionKernel& k, Boundary b = Boundary::mirror);

/// Exact adjoint of motion_convolve in its first argument.
Texture motion_convolve_adjoint(const Texture& r, const MotionKernel& k,
                                Boundary b = Boundary::mirror);

/// d/dh of <r, motion_convolve(f, h)>: correlation of f with r sampled on the
/// kernel grid. Returns raw (unprojected) weights.
MotionKernel motion_kernel_gradient(const Texture& f, const Texture& r, Vec2i extent, Vec2i center,
                                    Boundary b = Boundary::mirror);

/// Assembles the light-field image from the blurred texture: one small
/// convolution over the block grid per (view offset, texture offset) pair,
/// run as a parallel map over views.
LightFieldImage render_lf(const Texture& g, const PsfBank& bank, Boundary b = Boundary::mirror);

/// Exact adjoint of render_lf.
Texture render_lf_adjoint(const LightFieldImage& r, const PsfBank& bank,
                          Boundary b = Boundary::mirror);

enum class MapDirection { forward, inverse };

/// Materialized bilinear resampling operator. The adjoint is the exact
/// transpose of the forward weights, which the deconvolution gradients rely
/// on. Output pixels whose bilinear taps reach outside the source are flagged
/// invalid so callers can fold them into the vignetting mask.
class SparseResampler {
 public:
  SparseResampler() = default;

  Raster apply(const Raster& in) const;
  Raster apply_adjoint(const Raster& out) const;

  const Raster& validity() const { return validity_; }
  Vec2i out_extent() const { return out_extent_; }
  Vec2i in_extent() const { return in_extent_; }

  /// Builds from a map assigning each output pixel its source position in
  /// pixel-index units (integers are pixel centres).
  template <typename MapFn>
  static SparseResampler build(Vec2i out_extent, Vec2i in_extent, MapFn&& src_of) {
    SparseResampler rs;
    rs.init(out_extent, in_extent);
    for (int r = 0; r < out_extent.r; ++r)
      for (int c = 0; c < out_extent.c; ++c) rs.push_pixel({r, c}, src_of(Vec2i{r, c}));
    return rs;
  }

 private:
  void init(Vec2i out_extent, Vec2i in_extent);
  void push_pixel(Vec2i out_px, Vec2d src);

  struct Entry {
    int src;
    double w;
  };
  Vec2i out_extent_{0, 0}, in_extent_{0, 0};
  std::vector<int> offsets_;
  std::vector<Entry> entries_;
  Raster validity_;
};

/// 2x3 affine map, row-major, acting on (row, col) coordinates.
using AffineWarp = std::array<double, 6>;

constexpr AffineWarp kIdentityWarp{1, 0, 0, 0, 1, 0};

bool is_identity_warp(const AffineWarp& w);
double warp_determinant(const AffineWarp& w);

/// forward: resample a model-grid image onto the raw grid (the warp maps
/// model coordinates to raw coordinates). inverse: undo it.
SparseResampler make_warp_resampler(Vec2i extent, const AffineWarp& warp, MapDirection dir);

/// Radial distortion r_d = r (1 + k1 r^2 + k2 r^4) about `center`, with radii
/// normalized by the half-diagonal. forward distorts (Newton-inverted
/// sampling), inverse undistorts (direct polynomial sampling).
SparseResampler make_radial_resampler(Vec2i extent, Vec2d center, double k1, double k2,
                                      MapDirection dir);

LightFieldImage apply_warp(const LightFieldImage& img, const AffineWarp& warp, MapDirection dir);
Texture apply_radial(const Texture& g, Vec2d center, double k1, double k2, MapDirection dir);

/// Real-camera corrections around the ideal imaging chain.
struct CorrectionSet {
  AffineWarp warp = kIdentityWarp;
  Vec2d radial_center{0, 0};
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  Raster mask;   // binary, sensor grid
  Raster white;  // positive gain, sensor grid

  static CorrectionSet identity(const LatticeSpec& spec);
  void validate(const LatticeSpec& spec) const;
  bool radial_is_identity() const { return kappa1 == 0.0 && kappa2 == 0.0; }
};

inline Texture apply_radial(const Texture& g, const CorrectionSet& corr, MapDirection dir) {
  return apply_radial(g, corr.radial_center, corr.kappa1, corr.kappa2, dir);
}

/// mask = 0 where the white capture is starved, where the dark capture shows
/// a hot pixel, and on the one-pixel block border ring; 1 elsewhere.
Raster build_mask(const LightFieldImage& white, const LightFieldImage& dark,
                  double threshold = 0.2, double hot_level = 0.1);

/// raw / white under the mask, 0 outside it.
LightFieldImage normalize_white(const LightFieldImage& raw, const LightFieldImage& white,
                                const Raster& mask);

/// Overlapping sensor patches with per-patch blend windows for synthesis and
/// binary rectangle masks for the estimation energy.
struct PatchLayout {
  struct Patch {
    Vec2i lo, hi;          // sensor rect [lo, hi)
    Vec2i tex_lo, tex_hi;  // texture window under the patch
    Raster blend;          // normalized raised-cosine synthesis weight
    std::vector<int> neighbors;
  };
  std::vector<Patch> patches;

  int count() const { return static_cast<int>(patches.size()); }
  bool in_patch(int i, Vec2i px) const {
    const Patch& p = patches[i];
    return px.r >= p.lo.r && px.r < p.hi.r && px.c >= p.lo.c && px.c < p.hi.c;
  }

  static PatchLayout single(const LatticeSpec& spec);
  static PatchLayout grid(const LatticeSpec& spec, Vec2i grid_dims, double overlap = 0.5);
};

/// The full imaging chain R -> H -> W -> mask materialized for one lattice,
/// with its exact adjoint. Identity corrections short-circuit to the plain
/// render so the ideal chain stays bit-exact.
class ModelOperators {
 public:
  ModelOperators(const PsfBank& bank, const CorrectionSet& corr, Boundary boundary);

  const PsfBank& bank() const { return *bank_; }
  const LatticeSpec& spec() const { return bank_->spec(); }
  Boundary boundary() const { return boundary_; }
  const Raster& effective_mask() const { return effective_mask_; }

  /// blurred texture -> masked sensor image
  Raster apply(const Raster& g) const;
  /// masked sensor residual -> texture gradient
  Raster apply_adjoint(const Raster& r) const;

 private:
  const PsfBank* bank_;
  Boundary boundary_;
  bool radial_identity_, warp_identity_;
  SparseResampler radial_, warp_;
  Raster effective_mask_;
};

/// Patch-blended Eq.-style synthesis: per patch, mask ( W H R (f * h_i) ),
/// blended with the normalized overlap windows.
LightFieldImage forward_full(const Texture& f, const std::vector<MotionKernel>& kernels,
                             const PsfBank& bank, const CorrectionSet& corrections,
                             const PatchLayout& patches, Boundary b = Boundary::mirror);

}  // namespace lfdeblur
