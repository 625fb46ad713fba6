#include "lfdeblur/deblur.hpp"

#include <cmath>
#include <iostream>
#include <utility>

#include "lfdeblur/errors.hpp"

namespace lfdeblur {

namespace {

constexpr double kTiny = 1e-30;
constexpr int kMaxBacktracks = 30;

}  // namespace

void DeblurConfig::validate() const {
  if (lambda_alt < 0 || lambda_final < 0 || lambda_patch < 0)
    throw ValidationError("DeblurConfig: regularization weights must be >= 0");
  if (step <= 0) throw ValidationError("DeblurConfig: step must be > 0");
  if (iters_per_level < 1) throw ValidationError("DeblurConfig: iters_per_level must be >= 1");
  if (pyramid_levels < 1) throw ValidationError("DeblurConfig: pyramid_levels must be >= 1");
  if (kernel_extent.r < 1 || kernel_extent.c < 1 || kernel_extent.r % 2 == 0 ||
      kernel_extent.c % 2 == 0)
    throw ValidationError("DeblurConfig: kernel extent must be odd in both axes");
  if (tv_epsilon <= 0) throw ValidationError("DeblurConfig: tv_epsilon must be > 0");
}

double tv_value(const Raster& f, double eps) {
  const int rows = f.rows(), cols = f.cols();
  long double acc = 0.0L;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double fx = (c + 1 < cols) ? f(r, c + 1) - f(r, c) : 0.0;
      const double fy = (r + 1 < rows) ? f(r + 1, c) - f(r, c) : 0.0;
      acc += std::sqrt(fx * fx + fy * fy + eps * eps);
    }
  return static_cast<double>(acc);
}

Raster tv_gradient(const Raster& f, double eps) {
  const int rows = f.rows(), cols = f.cols();
  Raster nx(rows, cols, 0.0), ny(rows, cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double fx = (c + 1 < cols) ? f(r, c + 1) - f(r, c) : 0.0;
      const double fy = (r + 1 < rows) ? f(r + 1, c) - f(r, c) : 0.0;
      const double mag = std::sqrt(fx * fx + fy * fy + eps * eps);
      nx(r, c) = fx / mag;
      ny(r, c) = fy / mag;
    }
  Raster g(rows, cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v = -nx(r, c) - ny(r, c);
      if (c > 0) v += nx(r, c - 1);
      if (r > 0) v += ny(r - 1, c);
      g(r, c) = v;
    }
  return g;
}

namespace {

Raster rect_restrict(const Raster& x, const PatchLayout::Patch& p) {
  Raster out(x.rows(), x.cols(), 0.0);
  for (int r = p.lo.r; r < p.hi.r; ++r)
    for (int c = p.lo.c; c < p.hi.c; ++c) out(r, c) = x(r, c);
  return out;
}

double half_norm2(const Raster& x) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += static_cast<long double>(x.data()[i]) * x.data()[i];
  return 0.5 * static_cast<double>(acc);
}

struct Residuals {
  std::vector<Raster> r;  // per patch, restricted to the patch rectangle
  double data = 0.0;      // sum_i 1/2 ||r_i||^2
};

/// Cached operator chain and masked data for one lattice level.
class Workspace {
 public:
  explicit Workspace(const ModelState& st)
      : st_(st), ops_(*st.bank, *st.corrections, st.boundary) {
    masked_data_ = st.data->values;
    const Raster& m = ops_.effective_mask();
    for (std::size_t i = 0; i < masked_data_.size(); ++i) masked_data_.data()[i] *= m.data()[i];
  }

  const ModelState& state() const { return st_; }
  const LatticeSpec& spec() const { return st_.bank->spec(); }
  int patch_count() const { return st_.patches->count(); }

  Raster residual_for(const Texture& f, const MotionKernel& h, int i) const {
    const Texture g = motion_convolve(f, h, st_.boundary);
    Raster y = ops_.apply(g.values);
    for (std::size_t n = 0; n < y.size(); ++n) y.data()[n] -= masked_data_.data()[n];
    return rect_restrict(y, st_.patches->patches[i]);
  }

  Residuals residuals(const Texture& f, const std::vector<MotionKernel>& ks) const {
    Residuals out;
    out.r.reserve(ks.size());
    for (int i = 0; i < patch_count(); ++i) {
      out.r.push_back(residual_for(f, ks[i], i));
      out.data += half_norm2(out.r.back());
    }
    return out;
  }

  Raster texture_gradient(const Texture& f, const std::vector<MotionKernel>& ks,
                          const Residuals& res) const {
    Raster g(f.values.rows(), f.values.cols(), 0.0);
    for (int i = 0; i < patch_count(); ++i) {
      const Texture back{ops_.apply_adjoint(res.r[i]), f.spec};
      axpy(g, 1.0, motion_convolve_adjoint(back, ks[i], st_.boundary).values);
    }
    return g;
  }

  MotionKernel kernel_gradient(const Texture& f, const Raster& res_i, Vec2i extent,
                               Vec2i center) const {
    const Texture back{ops_.apply_adjoint(res_i), f.spec};
    return motion_kernel_gradient(f, back, extent, center, st_.boundary);
  }

 private:
  ModelState st_;
  ModelOperators ops_;
  Raster masked_data_;
};

double similarity_energy(const MotionKernel& h, int i, const std::vector<MotionKernel>& all,
                         const PatchLayout& patches, double lambda_patch) {
  if (lambda_patch == 0.0) return 0.0;
  long double acc = 0.0L;
  for (int k : patches.patches[i].neighbors) {
    const Raster& a = h.weights;
    const Raster& b = all[k].weights;
    for (std::size_t n = 0; n < a.size(); ++n) {
      const double d = a.data()[n] - b.data()[n];
      acc += static_cast<long double>(d) * d;
    }
  }
  return 0.5 * lambda_patch * static_cast<double>(acc);
}

void add_similarity_gradient(MotionKernel& grad, const MotionKernel& h, int i,
                             const std::vector<MotionKernel>& all, const PatchLayout& patches,
                             double lambda_patch) {
  if (lambda_patch == 0.0) return;
  for (int k : patches.patches[i].neighbors)
    for (std::size_t n = 0; n < grad.weights.size(); ++n)
      grad.weights.data()[n] +=
          lambda_patch * (h.weights.data()[n] - all[k].weights.data()[n]);
}

void verify_feasible(const MotionKernel& k) {
  if (min_value(k.weights) < 0.0 || !kernel_feasible(k, 1e-12))
    throw NumericalError("motion kernel infeasible after projection");
}

Texture clamped_step(const Texture& f, const Raster& grad, double step) {
  Texture out = f;
  axpy(out.values, -step, grad);
  clamp01(out.values);
  return out;
}

/// Gradient descent on the texture with in-place halving backtracking.
/// Appends the data term to `trace` once per iteration when given.
void texture_descent(const Workspace& w, Texture& f, const std::vector<MotionKernel>& ks,
                     double lambda_tv, double tv_eps, int iters, double step_scale,
                     std::vector<double>* trace) {
  Residuals res = w.residuals(f, ks);
  double energy = res.data + lambda_tv * tv_value(f.values, tv_eps);
  double step = 0.0;
  for (int it = 0; it < iters; ++it) {
    Raster grad = w.texture_gradient(f, ks, res);
    if (lambda_tv > 0.0) axpy(grad, lambda_tv, tv_gradient(f.values, tv_eps));
    if (!all_finite(grad))
      throw DivergenceError("texture gradient is not finite; reduce the step size");
    if (step == 0.0) step = step_scale / (max_abs(grad) + kTiny);
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      Texture f_try = clamped_step(f, grad, step);
      Residuals res_try = w.residuals(f_try, ks);
      const double e_try = res_try.data + lambda_tv * tv_value(f_try.values, tv_eps);
      if (e_try <= energy) {
        f = std::move(f_try);
        res = std::move(res_try);
        energy = e_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (trace) trace->push_back(res.data);
    if (!accepted && step * max_abs(grad) < 1e-16) break;  // converged to machine precision
  }
}

MotionKernel project_or_reset(const MotionKernel& raw, Vec2i extent, int* resets) {
  try {
    return project_kernel(raw);
  } catch (const DegenerateKernelError&) {
    if (resets) ++*resets;
    std::cerr << "lfdeblur: degenerate kernel projection, resetting to delta\n";
    return MotionKernel::delta(extent);
  }
}

/// One pyramid level of alternating texture/kernel rounds.
void alternate_level(const Workspace& w, Texture& f, std::vector<MotionKernel>& kernels,
                     const DeblurConfig& cfg, std::vector<double>& trace, int* resets) {
  const PatchLayout& patches = *w.state().patches;
  const double lambda = cfg.lambda_alt;
  const double eps = cfg.tv_epsilon;

  Residuals res = w.residuals(f, kernels);
  double tv = tv_value(f.values, eps);
  trace.push_back(res.data);

  double step_f = 0.0;
  std::vector<double> step_h(kernels.size(), 0.0);
  double prev_total = res.data + lambda * tv;
  for (int i = 0; i < patches.count(); ++i)
    prev_total += similarity_energy(kernels[i], i, kernels, patches, cfg.lambda_patch);
  int rising = 0;

  for (int it = 0; it < cfg.iters_per_level; ++it) {
    // texture step
    {
      Raster grad = w.texture_gradient(f, kernels, res);
      axpy(grad, lambda, tv_gradient(f.values, eps));
      if (!all_finite(grad))
        throw DivergenceError("texture gradient is not finite; reduce the step size", trace);
      if (step_f == 0.0) step_f = cfg.step / (max_abs(grad) + kTiny);
      double energy = res.data + lambda * tv;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        Texture f_try = clamped_step(f, grad, step_f);
        Residuals res_try = w.residuals(f_try, kernels);
        const double tv_try = tv_value(f_try.values, eps);
        if (res_try.data + lambda * tv_try <= energy) {
          f = std::move(f_try);
          res = std::move(res_try);
          tv = tv_try;
          break;
        }
        step_f *= 0.5;
      }
    }

    // kernel round, Jacobi in the previous round's neighbors
    const std::vector<MotionKernel> prev = kernels;
    for (int i = 0; i < patches.count(); ++i) {
      MotionKernel grad = w.kernel_gradient(f, res.r[i], prev[i].extent(), prev[i].center);
      add_similarity_gradient(grad, prev[i], i, prev, patches, cfg.lambda_patch);
      if (!all_finite(grad.weights))
        throw DivergenceError("kernel gradient is not finite; reduce the step size", trace);
      if (step_h[i] == 0.0) step_h[i] = cfg.step / (max_abs(grad.weights) + kTiny);
      const double e_old = half_norm2(res.r[i]) +
                           similarity_energy(prev[i], i, prev, patches, cfg.lambda_patch);
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        MotionKernel raw = prev[i];
        axpy(raw.weights, -step_h[i], grad.weights);
        MotionKernel h_try = project_or_reset(raw, prev[i].extent(), resets);
        Raster r_try = w.residual_for(f, h_try, i);
        const double e_new = half_norm2(r_try) +
                             similarity_energy(h_try, i, prev, patches, cfg.lambda_patch);
        if (e_new <= e_old) {
          res.data += half_norm2(r_try) - half_norm2(res.r[i]);
          res.r[i] = std::move(r_try);
          kernels[i] = std::move(h_try);
          break;
        }
        step_h[i] *= 0.5;
      }
      verify_feasible(kernels[i]);
    }

    trace.push_back(res.data);

    double total = res.data + lambda * tv;
    for (int i = 0; i < patches.count(); ++i)
      total += similarity_energy(kernels[i], i, kernels, patches, cfg.lambda_patch);
    if (total > prev_total) {
      if (++rising >= 10)
        throw DivergenceError("energy increased for 10 consecutive iterations", trace);
    } else {
      rising = 0;
    }
    prev_total = total;
  }
}

int levels_feasible(Vec2i texture_units) {
  int n = 1;
  Vec2i d = texture_units;
  while (d.r % 2 == 0 && d.c % 2 == 0 && d.r > 1 && d.c > 1) {
    d = {d.r / 2, d.c / 2};
    ++n;
  }
  return n;
}

Vec2i level_kernel_extent(Vec2i finest, int scale) {
  auto shrink = [scale](int n) {
    int v = (n + scale - 1) / scale;
    if (v % 2 == 0) ++v;
    return std::max(3, v);
  };
  return {shrink(finest.r), shrink(finest.c)};
}

}  // namespace

double data_energy(const ModelState& st, const Texture& f,
                   const std::vector<MotionKernel>& kernels) {
  const Workspace w(st);
  return w.residuals(f, kernels).data;
}

Raster data_gradient_texture(const ModelState& st, const Texture& f,
                             const std::vector<MotionKernel>& kernels) {
  const Workspace w(st);
  return w.texture_gradient(f, kernels, w.residuals(f, kernels));
}

double patch_energy(const ModelState& st, const Texture& f, const MotionKernel& h, int i,
                    const std::vector<MotionKernel>& all_kernels, double lambda_patch) {
  const Workspace w(st);
  return half_norm2(w.residual_for(f, h, i)) +
         similarity_energy(h, i, all_kernels, *st.patches, lambda_patch);
}

MotionKernel patch_gradient_kernel(const ModelState& st, const Texture& f, const MotionKernel& h,
                                   int i, const std::vector<MotionKernel>& all_kernels,
                                   double lambda_patch) {
  const Workspace w(st);
  MotionKernel grad = w.kernel_gradient(f, w.residual_for(f, h, i), h.extent(), h.center);
  add_similarity_gradient(grad, h, i, all_kernels, *st.patches, lambda_patch);
  return grad;
}

Texture update_texture(const ModelState& st, const Texture& f,
                       const std::vector<MotionKernel>& kernels, double lambda_tv, double tv_eps,
                       double step) {
  const Workspace w(st);
  Raster grad = w.texture_gradient(f, kernels, w.residuals(f, kernels));
  if (lambda_tv > 0.0) axpy(grad, lambda_tv, tv_gradient(f.values, tv_eps));
  if (!all_finite(grad))
    throw DivergenceError("texture gradient is not finite; reduce the step size");
  return clamped_step(f, grad, step);
}

MotionKernel update_kernel(const ModelState& st, const Texture& f, int i,
                           const std::vector<MotionKernel>& kernels, double lambda_patch,
                           double step, int* resets) {
  const Workspace w(st);
  MotionKernel grad = w.kernel_gradient(f, w.residual_for(f, kernels[i], i), kernels[i].extent(),
                                        kernels[i].center);
  add_similarity_gradient(grad, kernels[i], i, kernels, *st.patches, lambda_patch);
  MotionKernel raw = kernels[i];
  axpy(raw.weights, -step, grad.weights);
  return project_or_reset(raw, kernels[i].extent(), resets);
}

std::vector<PyramidLevel> build_pyramid(const LightFieldImage& l_m, const PsfBank& bank,
                                        const CorrectionSet& corrections,
                                        const DeblurConfig& cfg) {
  cfg.validate();
  if (!(l_m.spec == bank.spec()))
    throw ValidationError("build_pyramid: image lattice does not match the PSF bank");
  corrections.validate(bank.spec());

  const int levels = std::min(cfg.pyramid_levels,
                              levels_feasible(bank.spec().texture_units_per_block));
  std::vector<PyramidLevel> out;
  out.reserve(levels);
  for (int l = 0; l < levels; ++l) {
    const int scale = 1 << l;
    PyramidLevel lvl;
    lvl.scale = scale;
    lvl.spec = bank.spec();
    lvl.spec.texture_units_per_block = {bank.spec().texture_units_per_block.r / scale,
                                        bank.spec().texture_units_per_block.c / scale};
    lvl.spec.texture_extent = {bank.spec().texture_extent.r / scale,
                               bank.spec().texture_extent.c / scale};
    lvl.kernel_extent = level_kernel_extent(cfg.kernel_extent, scale);
    lvl.corrections = corrections;
    lvl.corrections.radial_center = {corrections.radial_center.r / scale,
                                     corrections.radial_center.c / scale};
    if (l == 0) {
      lvl.bank = bank;
    } else {
      PsfBuildOptions opts;
      opts.max_support_radius = std::max(8, bank.support_radius() + 2);
      lvl.bank = build_psf_bank(bank.camera(), lvl.spec, opts);
    }
    out.push_back(std::move(lvl));
  }
  return out;
}

Texture deconvolve_known_kernel(const LightFieldImage& l_m, const PsfBank& bank,
                                const CorrectionSet& corrections, const PatchLayout& patches,
                                const std::vector<MotionKernel>& kernels, double lambda_tv,
                                const DeblurConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(kernels.size()) != patches.count())
    throw ValidationError("deconvolve_known_kernel: one kernel required per patch");
  for (const auto& k : kernels)
    if (!kernel_feasible(k, 1e-9))
      throw ValidationError("deconvolve_known_kernel: kernels must be feasible");
  const ModelState st{&bank, &corrections, &patches, &l_m, Boundary::mirror};
  const Workspace w(st);
  Texture f{Raster(bank.spec().texture_extent.r, bank.spec().texture_extent.c, 0.5), bank.spec()};
  texture_descent(w, f, kernels, lambda_tv, cfg.tv_epsilon, cfg.iters_per_level, cfg.step,
                  nullptr);
  return f;
}

DeblurResult blind_deconvolve(const LightFieldImage& l_m, const PsfBank& bank,
                              const CorrectionSet& corrections, const PatchLayout& patches,
                              const DeblurConfig& cfg) {
  cfg.validate();
  const std::vector<PyramidLevel> levels = build_pyramid(l_m, bank, corrections, cfg);
  const int coarsest = static_cast<int>(levels.size()) - 1;

  DeblurResult result;
  int resets = 0;

  // Initialization at the coarsest level: delta kernels and the texture
  // estimated as if there were no motion blur.
  std::vector<MotionKernel> kernels(patches.count(),
                                    MotionKernel::delta(levels[coarsest].kernel_extent));
  Texture f = deconvolve_known_kernel(l_m, levels[coarsest].bank, levels[coarsest].corrections,
                                      patches, kernels, cfg.lambda_alt, cfg);

  for (int l = coarsest; l >= 0; --l) {
    const PyramidLevel& lvl = levels[l];
    if (l != coarsest) {
      Raster up = upscale_texture(f.values, lvl.spec.texture_extent);
      clamp01(up);
      f = Texture{std::move(up), lvl.spec};
      for (auto& k : kernels) k = upscale_kernel(k, lvl.kernel_extent);
    }
    const ModelState st{&lvl.bank, &lvl.corrections, &patches, &l_m, Boundary::mirror};
    const Workspace w(st);
    alternate_level(w, f, kernels, cfg, result.energy_trace, &resets);
  }

  {
    const PyramidLevel& fine = levels[0];
    const ModelState st{&fine.bank, &fine.corrections, &patches, &l_m, Boundary::mirror};
    const Workspace w(st);
    texture_descent(w, f, kernels, cfg.lambda_final, cfg.tv_epsilon, cfg.iters_per_level,
                    cfg.step, &result.energy_trace);
  }

  result.texture = std::move(f);
  result.kernels = std::move(kernels);
  result.projection_resets = resets;
  return result;
}

Raster upscale_texture(const Raster& coarse, Vec2i fine_extent) {
  const double sr = static_cast<double>(coarse.rows()) / fine_extent.r;
  const double sc = static_cast<double>(coarse.cols()) / fine_extent.c;
  const SparseResampler rs = SparseResampler::build(
      fine_extent, {coarse.rows(), coarse.cols()}, [&](Vec2i p) {
        return Vec2d{std::clamp((p.r + 0.5) * sr - 0.5, 0.0, coarse.rows() - 1.0),
                     std::clamp((p.c + 0.5) * sc - 0.5, 0.0, coarse.cols() - 1.0)};
      });
  return rs.apply(coarse);
}

MotionKernel upscale_kernel(const MotionKernel& coarse, Vec2i fine_extent) {
  MotionKernel fine;
  fine.weights = Raster(fine_extent.r, fine_extent.c, 0.0);
  fine.center = {fine_extent.r / 2, fine_extent.c / 2};
  for (int r = 0; r < fine_extent.r; ++r)
    for (int c = 0; c < fine_extent.c; ++c) {
      const double src_r = coarse.center.r + (r - fine.center.r) * 0.5;
      const double src_c = coarse.center.c + (c - fine.center.c) * 0.5;
      const int r0 = static_cast<int>(std::floor(src_r));
      const int c0 = static_cast<int>(std::floor(src_c));
      const double fr = src_r - r0, fc = src_c - c0;
      double acc = 0.0;
      for (int dr = 0; dr <= 1; ++dr)
        for (int dc = 0; dc <= 1; ++dc) {
          const int rr = r0 + dr, cc = c0 + dc;
          if (rr < 0 || rr >= coarse.weights.rows() || cc < 0 || cc >= coarse.weights.cols())
            continue;
          const double wgt = (dr ? fr : 1 - fr) * (dc ? fc : 1 - fc);
          acc += wgt * coarse.weights(rr, cc);
        }
      fine.weights(r, c) = acc;
    }
  int resets = 0;
  return project_or_reset(fine, fine_extent, &resets);
}

}  // namespace lfdeblur
