#include "lfdeblur/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "lfdeblur/errors.hpp"
#include "lfdeblur/parallel.hpp"

namespace lfdeblur {

namespace {

constexpr double kPi = 3.14159265358979323846;

double mse(const Raster& a, const Raster& b) {
  if (!a.same_extent(b)) throw ValidationError("psnr/ssim: extent mismatch");
  if (a.empty()) throw ValidationError("psnr/ssim: empty raster");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    acc += static_cast<long double>(d) * d;
  }
  return static_cast<double>(acc / a.size());
}

}  // namespace

double psnr(const Raster& a, const Raster& b) {
  const double m = mse(a, b);
  if (m < 1e-12) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

/// Valid-mode separable filtering with the SSIM Gaussian window.
Raster ssim_filter(const Raster& in) {
  static const std::vector<double> w = [] {
    std::vector<double> v(kSsimWindow);
    double s = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - (kSsimWindow - 1) / 2.0;
      v[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      s += v[i];
    }
    for (double& x : v) x /= s;
    return v;
  }();
  const int rows = in.rows(), cols = in.cols();
  const int out_cols = cols - kSsimWindow + 1;
  Raster tmp(rows, out_cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += w[k] * in(r, c + k);
      tmp(r, c) = acc;
    }
  const int out_rows = rows - kSsimWindow + 1;
  Raster out(out_rows, out_cols, 0.0);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += w[k] * tmp(r + k, c);
      out(r, c) = acc;
    }
  return out;
}

Raster hadamard(const Raster& a, const Raster& b) {
  Raster out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

}  // namespace

double ssim(const Raster& a, const Raster& b) {
  if (!a.same_extent(b)) throw ValidationError("ssim: extent mismatch");
  if (a.rows() < kSsimWindow || a.cols() < kSsimWindow)
    throw ValidationError("ssim: image smaller than the 11x11 window");
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const Raster mu_a = ssim_filter(a);
  const Raster mu_b = ssim_filter(b);
  const Raster aa = ssim_filter(hadamard(a, a));
  const Raster bb = ssim_filter(hadamard(b, b));
  const Raster ab = ssim_filter(hadamard(a, b));
  long double acc = 0.0L;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.data()[i], mb = mu_b.data()[i];
    const double va = aa.data()[i] - ma * ma;
    const double vb = bb.data()[i] - mb * mb;
    const double cov = ab.data()[i] - ma * mb;
    acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return static_cast<double>(acc / mu_a.size());
}

namespace {

Raster crop(const Raster& x, Vec2i lo, Vec2i extent) {
  Raster out(extent.r, extent.c);
  for (int r = 0; r < extent.r; ++r)
    for (int c = 0; c < extent.c; ++c) out(r, c) = x(lo.r + r, lo.c + c);
  return out;
}

bool shift_beats(Vec2i cand, Vec2i best) {
  const int mc = cand.r * cand.r + cand.c * cand.c;
  const int mb = best.r * best.r + best.c * best.c;
  if (mc != mb) return mc < mb;
  if (cand.r != best.r) return cand.r < best.r;
  return cand.c < best.c;
}

}  // namespace

AlignedScore aligned_metric(const Raster& est, const Raster& gt, int max_shift) {
  if (!est.same_extent(gt)) throw ValidationError("aligned_metric: extent mismatch");
  if (max_shift < 0) throw ValidationError("aligned_metric: max_shift must be >= 0");
  AlignedScore best;
  best.psnr = -std::numeric_limits<double>::infinity();
  best.ssim = -std::numeric_limits<double>::infinity();
  for (int sr = -max_shift; sr <= max_shift; ++sr)
    for (int sc = -max_shift; sc <= max_shift; ++sc) {
      const Vec2i s{sr, sc};
      const Vec2i lo_gt{std::max(0, -sr), std::max(0, -sc)};
      const Vec2i lo_est{lo_gt.r + sr, lo_gt.c + sc};
      const Vec2i extent{est.rows() - std::abs(sr), est.cols() - std::abs(sc)};
      if (extent.r <= 0 || extent.c <= 0) continue;
      const Raster e = crop(est, lo_est, extent);
      const Raster g = crop(gt, lo_gt, extent);
      const double p = psnr(e, g);
      if (p > best.psnr || (p == best.psnr && shift_beats(s, best.psnr_shift))) {
        best.psnr = p;
        best.psnr_shift = s;
      }
      if (extent.r >= kSsimWindow && extent.c >= kSsimWindow) {
        const double q = ssim(e, g);
        if (q > best.ssim || (q == best.ssim && shift_beats(s, best.ssim_shift))) {
          best.ssim = q;
          best.ssim_shift = s;
        }
      }
    }
  return best;
}

Raster add_noise(const Raster& img, double percent, std::uint64_t seed) {
  if (percent < 0) throw ValidationError("add_noise: percent must be >= 0");
  if (percent == 0.0) return img;
  Raster out = img;
  const double sigma = percent / 100.0;
  std::mt19937_64 rng(seed);
  // Explicit Box-Muller so the byte stream is pinned by the engine alone.
  auto uniform = [&rng]() { return ((rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0); };
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u1 = uniform();
    const double u2 = uniform();
    out.data()[i] += sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
  return out;
}

namespace {

struct SplitMix {
  std::uint64_t s;
  std::uint64_t next() {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
};

Raster texture_bricks(Vec2i e, std::uint64_t seed) {
  SplitMix rng{seed};
  Raster out(e.r, e.c, 0.0);
  const int bh = 8, bw = 16;
  std::vector<double> shade((e.r / bh + 2) * (e.c / bw + 2));
  for (double& s : shade) s = 0.25 + 0.6 * rng.uniform();
  for (int r = 0; r < e.r; ++r)
    for (int c = 0; c < e.c; ++c) {
      const int br = r / bh;
      const int cc = c + ((br % 2) ? bw / 2 : 0);
      const int bc = cc / bw;
      const bool mortar = (r % bh == 0) || (cc % bw == 0);
      double v = mortar ? 0.9 : shade[br * (e.c / bw + 2) + bc];
      v += 0.002 * (r + c);  // gentle illumination ramp
      out(r, c) = std::clamp(v, 0.05, 0.95);
    }
  return out;
}

Raster texture_blobs(Vec2i e, std::uint64_t seed) {
  SplitMix rng{seed};
  Raster out(e.r, e.c, 0.45);
  for (int i = 0; i < 14; ++i) {
    const double cr = rng.uniform() * e.r;
    const double cc = rng.uniform() * e.c;
    const double rad = 2.0 + 6.0 * rng.uniform();
    const double amp = (rng.uniform() < 0.5 ? -0.35 : 0.35);
    const bool hard = i < 5;
    for (int r = 0; r < e.r; ++r)
      for (int c = 0; c < e.c; ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        if (hard)
          out(r, c) += (d2 < rad * rad) ? amp : 0.0;
        else
          out(r, c) += amp * std::exp(-d2 / (2 * rad * rad));
      }
  }
  clamp01(out);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = 0.05 + 0.9 * out.data()[i];
  return out;
}

Raster texture_strokes(Vec2i e, std::uint64_t seed) {
  SplitMix rng{seed};
  Raster out(e.r, e.c, 0.0);
  for (int r = 0; r < e.r; ++r)
    for (int c = 0; c < e.c; ++c) out(r, c) = 0.75 + 0.15 * (r + c) / double(e.r + e.c);
  for (int i = 0; i < 26; ++i) {
    double r = rng.uniform() * e.r;
    double c = rng.uniform() * e.c;
    const double ang = rng.uniform() * 2 * kPi;
    const double len = 4 + 14 * rng.uniform();
    const double ink = 0.08 + 0.25 * rng.uniform();
    const int thick = (rng.uniform() < 0.3) ? 2 : 1;
    for (double t = 0; t < len; t += 0.5) {
      const int rr = static_cast<int>(r + t * std::sin(ang));
      const int cc = static_cast<int>(c + t * std::cos(ang));
      for (int dr = 0; dr < thick; ++dr)
        for (int dc = 0; dc < thick; ++dc)
          if (rr + dr >= 0 && rr + dr < e.r && cc + dc >= 0 && cc + dc < e.c)
            out(rr + dr, cc + dc) = ink;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::clamp(out.data()[i], 0.05, 0.95);
  return out;
}

/// Deposits a unit path point into the kernel with bilinear antialiasing.
void splat_path(Raster& k, double r, double c) {
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const double fr = r - r0, fc = c - c0;
  for (int dr = 0; dr <= 1; ++dr)
    for (int dc = 0; dc <= 1; ++dc) {
      const int rr = r0 + dr, cc = c0 + dc;
      if (rr < 0 || rr >= k.rows() || cc < 0 || cc >= k.cols()) continue;
      k(rr, cc) += (dr ? fr : 1 - fr) * (dc ? fc : 1 - fc);
    }
}

MotionKernel trace_kernel(int side, const std::vector<Vec2d>& path) {
  MotionKernel k;
  k.weights = Raster(side, side, 0.0);
  k.center = {side / 2, side / 2};
  for (const Vec2d& p : path) splat_path(k.weights, k.center.r + p.r, k.center.c + p.c);
  return project_kernel(k);
}

}  // namespace

Raster synth_texture(const std::string& kind, Vec2i extent, std::uint64_t seed) {
  if (kind == "bricks") return texture_bricks(extent, seed);
  if (kind == "blobs") return texture_blobs(extent, seed);
  if (kind == "strokes") return texture_strokes(extent, seed);
  throw ValidationError("synth_texture: unknown kind " + kind);
}

MotionKernel synth_motion_kernel(const std::string& kind, std::uint64_t seed) {
  std::vector<Vec2d> path;
  if (kind == "line9") {
    for (double t = -2.0; t <= 2.0; t += 0.25) path.push_back({0.3 * t, t});
    return trace_kernel(9, path);
  }
  if (kind == "diag11") {
    for (double t = -3.2; t <= 3.2; t += 0.2) path.push_back({0.8 * t, -t});
    return trace_kernel(11, path);
  }
  if (kind == "curve13") {
    for (double t = -4.0; t <= 4.0; t += 0.2) path.push_back({0.18 * t * t - 1.2, t});
    return trace_kernel(13, path);
  }
  if (kind == "zigzag11") {
    SplitMix rng{seed};
    double r = 0, c = 0, vr = 0.35, vc = 0.6;
    for (int i = 0; i < 40; ++i) {
      path.push_back({r, c});
      vr += 0.35 * (rng.uniform() - 0.5);
      vc += 0.35 * (rng.uniform() - 0.5);
      r = std::clamp(r + vr, -4.0, 4.0);
      c = std::clamp(c + vc, -4.0, 4.0);
    }
    return trace_kernel(11, path);
  }
  throw ValidationError("synth_motion_kernel: unknown kind " + kind);
}

PsfBank make_identity_bank(Vec2i extent) {
  LatticeSpec spec;
  spec.layout = Layout::rectangular;
  spec.pixels_per_block = {1, 1};
  spec.texture_units_per_block = {1, 1};
  spec.sensor_extent = extent;
  spec.texture_extent = extent;
  spec.validate();
  CameraConfig cam;
  cam.main_lens_focal_length = cam.pixel_size = cam.microlens_spacing = 1.0;
  cam.lens_to_mla_distance = cam.mla_to_sensor_distance = cam.microlens_focal_length = 1.0;
  cam.f_number = 1.0;
  cam.scene_depth = 2.0;
  PsfBank bank(spec, cam, 0);
  bank.kernel({0, 0}, {0, 0})(0, 0) = 1.0;
  bank.rebuild_taps();
  return bank;
}

namespace {

/// Planar patch layout over the texture plane derived from the sensor-side
/// layout's texture windows.
PatchLayout planar_patches(const PatchLayout& patches, const LatticeSpec& planar_spec) {
  if (patches.count() == 1) return PatchLayout::single(planar_spec);
  PatchLayout out;
  const Vec2i ext = planar_spec.sensor_extent;
  Raster total(ext.r, ext.c, 0.0);
  for (const auto& sp : patches.patches) {
    PatchLayout::Patch p;
    p.lo = sp.tex_lo;
    p.hi = sp.tex_hi;
    p.tex_lo = sp.tex_lo;
    p.tex_hi = sp.tex_hi;
    p.neighbors = sp.neighbors;
    p.blend = Raster(ext.r, ext.c, 0.0);
    const int nr = p.hi.r - p.lo.r, nc = p.hi.c - p.lo.c;
    for (int r = p.lo.r; r < p.hi.r; ++r)
      for (int c = p.lo.c; c < p.hi.c; ++c)
        p.blend(r, c) = (0.5 - 0.5 * std::cos(2 * kPi * (r - p.lo.r + 0.5) / nr)) *
                        (0.5 - 0.5 * std::cos(2 * kPi * (c - p.lo.c + 0.5) / nc));
    axpy(total, 1.0, p.blend);
    out.patches.push_back(std::move(p));
  }
  for (auto& p : out.patches)
    for (std::size_t i = 0; i < total.size(); ++i)
      if (total.data()[i] > 0.0) p.blend.data()[i] /= total.data()[i];
  return out;
}

}  // namespace

DeblurResult two_step_baseline(const LightFieldImage& l_m, const PsfBank& bank,
                               const CorrectionSet& corrections, const PatchLayout& patches,
                               const DeblurConfig& cfg) {
  // Step 1: texture estimate with no motion compensation.
  const std::vector<MotionKernel> deltas(patches.count(), MotionKernel::delta(cfg.kernel_extent));
  const Texture step1 =
      deconvolve_known_kernel(l_m, bank, corrections, patches, deltas, cfg.lambda_final, cfg);

  // Step 2: conventional planar blind deconvolution of that estimate.
  const PsfBank planar = make_identity_bank(bank.spec().texture_extent);
  const CorrectionSet ident = CorrectionSet::identity(planar.spec());
  const PatchLayout pp = planar_patches(patches, planar.spec());
  const LightFieldImage planar_obs{step1.values, planar.spec()};
  return blind_deconvolve(planar_obs, planar, ident, pp, cfg);
}

std::vector<Aggregate> ExperimentReport::aggregates() const {
  std::vector<Aggregate> out;
  for (const CaseResult& row : rows) {
    if (!row.ok) continue;
    Aggregate* agg = nullptr;
    for (Aggregate& a : out)
      if (a.noise_percent == row.noise_percent && a.method == row.method) agg = &a;
    if (!agg) {
      out.push_back({row.noise_percent, row.method, 0, 0, 0, 0, 0});
      agg = &out.back();
    }
    ++agg->cases;
    agg->psnr_mu += row.psnr;
    agg->ssim_mu += row.ssim;
  }
  for (Aggregate& a : out) {
    a.psnr_mu /= a.cases;
    a.ssim_mu /= a.cases;
  }
  for (const CaseResult& row : rows) {
    if (!row.ok) continue;
    for (Aggregate& a : out)
      if (a.noise_percent == row.noise_percent && a.method == row.method) {
        a.psnr_sigma += (row.psnr - a.psnr_mu) * (row.psnr - a.psnr_mu);
        a.ssim_sigma += (row.ssim - a.ssim_mu) * (row.ssim - a.ssim_mu);
      }
  }
  for (Aggregate& a : out) {
    a.psnr_sigma = std::sqrt(a.psnr_sigma / a.cases);
    a.ssim_sigma = std::sqrt(a.ssim_sigma / a.cases);
  }
  return out;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "case,texture,kernel,noise_pct,method,psnr_db,ssim,shift_r,shift_c,status\n";
  os.precision(10);
  for (const CaseResult& r : rows) {
    os << r.case_index << ',' << r.texture << ',' << r.kernel << ',' << r.noise_percent << ','
       << r.method << ',';
    if (r.ok)
      os << r.psnr << ',' << r.ssim << ',' << r.shift.r << ',' << r.shift.c << ",ok\n";
    else
      os << ",,,,failed: " << r.error << '\n';
  }
  return os.str();
}

std::string ExperimentReport::to_table() const {
  std::ostringstream os;
  os.precision(4);
  os << "noise    metric   proposed          two-step\n";
  const auto aggs = aggregates();
  std::vector<double> noises;
  for (const Aggregate& a : aggs)
    if (std::find(noises.begin(), noises.end(), a.noise_percent) == noises.end())
      noises.push_back(a.noise_percent);
  std::sort(noises.begin(), noises.end());
  auto find = [&](double n, const std::string& m) -> const Aggregate* {
    for (const Aggregate& a : aggs)
      if (a.noise_percent == n && a.method == m) return &a;
    return nullptr;
  };
  for (double n : noises) {
    const Aggregate* prop = find(n, "proposed");
    const Aggregate* two = find(n, "two-step");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%5.1f%%   PSNR     mu %6.2f sd %5.2f   mu %6.2f sd %5.2f\n",
                  n, prop ? prop->psnr_mu : 0.0, prop ? prop->psnr_sigma : 0.0,
                  two ? two->psnr_mu : 0.0, two ? two->psnr_sigma : 0.0);
    os << buf;
    std::snprintf(buf, sizeof buf, "         SSIM     mu %6.3f sd %5.3f   mu %6.3f sd %5.3f\n",
                  prop ? prop->ssim_mu : 0.0, prop ? prop->ssim_sigma : 0.0,
                  two ? two->ssim_mu : 0.0, two ? two->ssim_sigma : 0.0);
    os << buf;
  }
  return os.str();
}

SuiteConfig desk_suite() {
  SuiteConfig s;
  s.camera.main_lens_focal_length = 0.0095;
  s.camera.f_number = 6.7;
  s.camera.pixel_size = 5e-6;
  s.camera.microlens_spacing = 20e-6;
  s.camera.lens_to_mla_distance = 0.0098;
  s.camera.mla_to_sensor_distance = 47.8e-6;
  s.camera.microlens_focal_length = 48e-6;
  s.camera.scene_depth = 3.0;

  s.spec.layout = Layout::rectangular;
  s.spec.pixels_per_block = {4, 4};
  s.spec.texture_units_per_block = {2, 2};
  s.spec.texture_extent = {64, 64};
  s.spec.sensor_extent = {128, 128};

  s.textures.emplace_back("bricks", synth_texture("bricks", {64, 64}, 11));
  s.textures.emplace_back("blobs", synth_texture("blobs", {64, 64}, 22));
  s.textures.emplace_back("strokes", synth_texture("strokes", {64, 64}, 33));
  s.kernels.emplace_back("line9", synth_motion_kernel("line9", 1));
  s.kernels.emplace_back("diag11", synth_motion_kernel("diag11", 2));
  s.kernels.emplace_back("curve13", synth_motion_kernel("curve13", 3));
  s.kernels.emplace_back("zigzag11", synth_motion_kernel("zigzag11", 4));

  s.deblur_clean.lambda_alt = 1.6e-3;
  s.deblur_clean.lambda_final = 7e-4;
  s.deblur_noisy.lambda_alt = 2e-3;
  s.deblur_noisy.lambda_final = 8e-4;
  for (DeblurConfig* c : {&s.deblur_clean, &s.deblur_noisy}) {
    c->lambda_patch = 4000.0;
    c->iters_per_level = 300;
    c->pyramid_levels = 3;
    c->kernel_extent = {13, 13};
    c->tv_epsilon = 1e-3;
  }
  return s;
}

ExperimentReport run_suite(const SuiteConfig& cfg) {
  if (cfg.textures.empty() || cfg.kernels.empty())
    throw ValidationError("run_suite: need at least one texture and one kernel");
  cfg.camera.validate();
  cfg.spec.validate();
  for (const auto& [name, tex] : cfg.textures)
    if (tex.rows() != cfg.spec.texture_extent.r || tex.cols() != cfg.spec.texture_extent.c)
      throw ValidationError("run_suite: texture " + name + " does not match the lattice extent");

  const PsfBank bank = build_psf_bank(cfg.camera, cfg.spec);
  const CorrectionSet corr = CorrectionSet::identity(cfg.spec);
  const PatchLayout patches = PatchLayout::single(cfg.spec);

  struct Job {
    int t, k;
    double noise;
    int index;
  };
  std::vector<Job> jobs;
  for (double n : cfg.noise_levels)
    for (std::size_t t = 0; t < cfg.textures.size(); ++t)
      for (std::size_t k = 0; k < cfg.kernels.size(); ++k)
        jobs.push_back({static_cast<int>(t), static_cast<int>(k), n,
                        static_cast<int>(jobs.size())});

  ExperimentReport report;
  report.rows.resize(jobs.size() * 2);

  auto run_job = [&](int ji) {
    const Job& job = jobs[ji];
    const auto& [tname, tex] = cfg.textures[job.t];
    const auto& [kname, kern] = cfg.kernels[job.k];
    for (int m = 0; m < 2; ++m) {
      CaseResult& row = report.rows[ji * 2 + m];
      row.case_index = job.index;
      row.texture = tname;
      row.kernel = kname;
      row.noise_percent = job.noise;
      row.method = (m == 0) ? "proposed" : "two-step";
    }
    try {
      const Texture f_gt = make_texture(tex, cfg.spec);
      const LightFieldImage clean = forward_full(f_gt, {kern}, bank, corr, patches);
      LightFieldImage obs{add_noise(clean.values, job.noise, cfg.seed + 7919 * job.index),
                          cfg.spec};
      const DeblurConfig& dc = (job.noise > 0) ? cfg.deblur_noisy : cfg.deblur_clean;

      const DeblurResult prop = blind_deconvolve(obs, bank, corr, patches, dc);
      const AlignedScore ps = aligned_metric(prop.texture.values, tex, cfg.max_shift);
      CaseResult& pr = report.rows[ji * 2];
      pr.psnr = std::min(ps.psnr, kPsnrCap);
      pr.ssim = ps.ssim;
      pr.shift = ps.psnr_shift;
      pr.ok = true;

      const DeblurResult two = two_step_baseline(obs, bank, corr, patches, dc);
      const AlignedScore ts = aligned_metric(two.texture.values, tex, cfg.max_shift);
      CaseResult& tr = report.rows[ji * 2 + 1];
      tr.psnr = std::min(ts.psnr, kPsnrCap);
      tr.ssim = ts.ssim;
      tr.shift = ts.psnr_shift;
      tr.ok = true;
    } catch (const std::exception& e) {
      for (int m = 0; m < 2; ++m) {
        CaseResult& row = report.rows[ji * 2 + m];
        if (!row.ok) {
          row.ok = false;
          row.error = e.what();
        }
      }
    }
  };

  if (cfg.parallel_cases)
    parallel_for(static_cast<int>(jobs.size()), run_job);
  else
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(static_cast<int>(i));
  return report;
}

}  // namespace lfdeblur
