#pragma once

#include <vector>

#include "lfdeblur/forward.hpp"
#include "lfdeblur/geometry.hpp"
#include "lfdeblur/psf.hpp"

namespace lfdeblur {

struct DeblurConfig {
  double lambda_alt = 1.6e-3;    // TV weight during alternation
  double lambda_final = 7e-4;    // TV weight for the final texture-only solve
  double lambda_patch = 4000.0;  // kernel similarity coupling across patches
  double step = 1.0;         // dimensionless step scale; gradient-normalized per level
  int iters_per_level = 300;
  int pyramid_levels = 3;
  Vec2i kernel_extent{9, 9};  // odd in both axes
  double tv_epsilon = 1e-3;

  void validate() const;
};

struct DeblurResult {
  Texture texture;
  std::vector<MotionKernel> kernels;  // one per patch
  std::vector<double> energy_trace;   // data-term value per iteration
  int projection_resets = 0;          // degenerate kernel projections recovered
};

/// sum over samples of sqrt(fx^2 + fy^2 + eps^2), forward differences.
double tv_value(const Raster& f, double eps);

/// Exact gradient of tv_value: divergence-form adjoint of the forward
/// differences applied to the smoothed-normalized gradient field.
Raster tv_gradient(const Raster& f, double eps);

/// The estimation problem one gradient evaluation sees. Patch residuals use
/// the binary patch rectangles; the vignetting mask and warp validity are
/// folded in by the operator chain.
struct ModelState {
  const PsfBank* bank = nullptr;
  const CorrectionSet* corrections = nullptr;
  const PatchLayout* patches = nullptr;
  const LightFieldImage* data = nullptr;
  Boundary boundary = Boundary::mirror;
};

/// sum_i 1/2 || rect_i . M . (W H R (f*h_i) - l_m) ||^2
double data_energy(const ModelState& st, const Texture& f,
                   const std::vector<MotionKernel>& kernels);

/// Gradient of data_energy in f (the TV term is handled separately).
Raster data_gradient_texture(const ModelState& st, const Texture& f,
                             const std::vector<MotionKernel>& kernels);

/// Patch i's energy in its own kernel with neighbor kernels held fixed:
/// data term plus lambda_p/2 sum_{k in N_i} ||h - h_k||^2.
double patch_energy(const ModelState& st, const Texture& f, const MotionKernel& h, int i,
                    const std::vector<MotionKernel>& all_kernels, double lambda_patch);

/// Gradient of patch_energy in h (Jacobi: neighbors fixed).
MotionKernel patch_gradient_kernel(const ModelState& st, const Texture& f, const MotionKernel& h,
                                   int i, const std::vector<MotionKernel>& all_kernels,
                                   double lambda_patch);

/// One explicit gradient step on the texture, clamped to [0,1].
/// Throws DivergenceError on a non-finite gradient.
Texture update_texture(const ModelState& st, const Texture& f,
                       const std::vector<MotionKernel>& kernels, double lambda_tv,
                       double tv_eps, double step);

/// One gradient step on patch i's kernel followed by the feasibility
/// projection. A degenerate projection resets to the centered delta;
/// `resets` (when given) counts those events.
MotionKernel update_kernel(const ModelState& st, const Texture& f, int i,
                           const std::vector<MotionKernel>& kernels, double lambda_patch,
                           double step, int* resets = nullptr);

struct PyramidLevel {
  LatticeSpec spec;
  PsfBank bank;
  CorrectionSet corrections;
  Vec2i kernel_extent;
  int scale = 1;  // texture downsampling factor vs. the finest level
};

/// Coarse-to-fine problem stack. Level l uses a texture grid downsampled by
/// 2^l against the same sensor data through a rebuilt PSF bank; the kernel
/// extent shrinks accordingly (never below 3x3). The number of levels is
/// clamped to what the texture-per-block counts can halve into.
std::vector<PyramidLevel> build_pyramid(const LightFieldImage& l_m, const PsfBank& bank,
                                        const CorrectionSet& corrections,
                                        const DeblurConfig& cfg);

/// Texture-only gradient descent under fixed kernels.
Texture deconvolve_known_kernel(const LightFieldImage& l_m, const PsfBank& bank,
                                const CorrectionSet& corrections, const PatchLayout& patches,
                                const std::vector<MotionKernel>& kernels, double lambda_tv,
                                const DeblurConfig& cfg);

/// Joint estimation of texture and per-patch motion kernels: projected
/// alternating gradient descent with TV regularization over the pyramid,
/// then a final texture-only solve with the lighter TV weight.
DeblurResult blind_deconvolve(const LightFieldImage& l_m, const PsfBank& bank,
                              const CorrectionSet& corrections, const PatchLayout& patches,
                              const DeblurConfig& cfg);

/// Bilinear upsampling helpers used between pyramid levels.
Raster upscale_texture(const Raster& coarse, Vec2i fine_extent);
MotionKernel upscale_kernel(const MotionKernel& coarse, Vec2i fine_extent);

}  // namespace lfdeblur
