#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lfdeblur/deblur.hpp"
#include "lfdeblur/forward.hpp"

namespace lfdeblur {

/// PSNR in dB over unit dynamic range. MSE below 1e-12 returns the +inf
/// sentinel; reports cap it at 120 dB to keep aggregates finite.
double psnr(const Raster& a, const Raster& b);

constexpr double kPsnrCap = 120.0;

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), unit dynamic range,
/// evaluated over valid window positions.
double ssim(const Raster& a, const Raster& b);

struct AlignedScore {
  double psnr = 0.0;
  double ssim = 0.0;
  Vec2i psnr_shift{0, 0};
  Vec2i ssim_shift{0, 0};
};

/// Best PSNR and best SSIM over integer shifts in [-max_shift, max_shift]^2,
/// each maximized independently on the shifted overlap region. Ties prefer
/// the smallest shift magnitude, then lexicographic order.
AlignedScore aligned_metric(const Raster& est, const Raster& gt, int max_shift);

/// Adds i.i.d. zero-mean Gaussian noise with sigma = percent/100 of the unit
/// dynamic range. Deterministic per seed; percent 0 returns the input.
Raster add_noise(const Raster& img, double percent, std::uint64_t seed);

/// Deterministic procedural test textures: "bricks", "blobs", "strokes".
Raster synth_texture(const std::string& kind, Vec2i extent, std::uint64_t seed);

/// Deterministic motion kernels: "line9", "diag11", "curve13", "zigzag11".
MotionKernel synth_motion_kernel(const std::string& kind, std::uint64_t seed);

/// Identity imaging model over a plain pixel grid; used to run the blind
/// deconvolution engine as a conventional planar deblurrer.
PsfBank make_identity_bank(Vec2i extent);

/// First estimates the texture ignoring motion blur, then runs planar TV
/// blind deconvolution (same projected alternating scheme on the identity
/// model) on that estimate, patch-wise with the similarity coupling.
DeblurResult two_step_baseline(const LightFieldImage& l_m, const PsfBank& bank,
                               const CorrectionSet& corrections, const PatchLayout& patches,
                               const DeblurConfig& cfg);

struct CaseResult {
  int case_index = 0;
  std::string texture;
  std::string kernel;
  double noise_percent = 0.0;
  std::string method;  // "proposed" or "two-step"
  double psnr = 0.0;   // capped at kPsnrCap
  double ssim = 0.0;
  Vec2i shift{0, 0};
  double trace_initial = 0.0;  // data term at the first/last recorded iteration
  double trace_final = 0.0;
  bool ok = false;
  std::string error;
};

struct Aggregate {
  double noise_percent = 0.0;
  std::string method;
  int cases = 0;
  double psnr_mu = 0.0, psnr_sigma = 0.0;
  double ssim_mu = 0.0, ssim_sigma = 0.0;
};

struct ExperimentReport {
  std::vector<CaseResult> rows;

  /// Per (noise level, method) mean and population standard deviation,
  /// recomputed from the rows.
  std::vector<Aggregate> aggregates() const;

  std::string to_csv() const;
  std::string to_table() const;
};

struct SuiteConfig {
  CameraConfig camera;
  LatticeSpec spec;
  std::vector<std::pair<std::string, Raster>> textures;
  std::vector<std::pair<std::string, MotionKernel>> kernels;
  std::vector<double> noise_levels{0.0, 2.5, 5.0};
  DeblurConfig deblur_clean;  // noise-free regularization weights
  DeblurConfig deblur_noisy;
  std::uint64_t seed = 1234;
  int max_shift = 8;
  bool parallel_cases = true;
};

/// Desk-scale defaults: 3 bundled textures x 4 motion kernels at 64x64
/// texture scale with a small-view camera model.
SuiteConfig desk_suite();

/// Synthesizes each (texture, kernel, noise) case, runs the proposed method
/// and the two-step baseline, and scores both against the ground truth with
/// shift alignment. Individual case failures are recorded and the suite
/// continues.
ExperimentReport run_suite(const SuiteConfig& cfg);

}  // namespace lfdeblur
