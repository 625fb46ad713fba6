#include <doctest.h>

#include <cmath>

#include "lfdeblur/deblur.hpp"
#include "lfdeblur/errors.hpp"
#include "lfdeblur/harness.hpp"
#include "oracles.hpp"

using namespace lfdeblur;

namespace {

LatticeSpec blocks_spec(Vec2i blocks) {
  LatticeSpec s;
  s.pixels_per_block = {4, 4};
  s.texture_units_per_block = {2, 2};
  s.sensor_extent = {blocks.r * 4, blocks.c * 4};
  s.texture_extent = {blocks.r * 2, blocks.c * 2};
  return s;
}

struct SmallProblem {
  PsfBank bank;
  CorrectionSet corr;
  PatchLayout patches;
  LightFieldImage data;
  ModelState state() const { return {&bank, &corr, &patches, &data, Boundary::mirror}; }
};

SmallProblem nontrivial_problem(Vec2i blocks, int n_patches, std::uint64_t seed) {
  SmallProblem p{build_psf_bank(desk_suite().camera, blocks_spec(blocks)),
                 CorrectionSet{},
                 {},
                 {}};
  const LatticeSpec& spec = p.bank.spec();
  p.corr = CorrectionSet::identity(spec);
  p.corr.warp = {1.003, 0.012, 0.2, -0.009, 0.997, -0.15};
  p.corr.kappa1 = 0.06;
  p.corr.kappa2 = -0.015;
  for (int r = 0; r < p.corr.mask.rows(); ++r)
    for (int c = 0; c < p.corr.mask.cols(); ++c)
      if ((r * 13 + c * 7) % 11 == 0) p.corr.mask(r, c) = 0.0;
  p.patches = n_patches == 1 ? PatchLayout::single(spec)
                             : PatchLayout::grid(spec, {1, n_patches});
  p.data = LightFieldImage{
      oracles::random_raster(spec.sensor_extent.r, spec.sensor_extent.c, seed), spec};
  return p;
}

}  // namespace

TEST_CASE("tv_value basics") {
  const double eps = 1e-12;
  Raster flat(6, 7, 0.42);
  CHECK(tv_value(flat, eps) == doctest::Approx(6 * 7 * eps));

  // unit step across one column of an 8-row image contributes 8
  Raster step(8, 6, 0.0);
  for (int r = 0; r < 8; ++r)
    for (int c = 3; c < 6; ++c) step(r, c) = 1.0;
  CHECK(tv_value(step, eps) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("tv_value agrees with a central-difference scheme within 5%") {
  const Raster f = oracles::random_raster(24, 24, 7);
  const double a = tv_value(f, 1e-3);
  const double b = oracles::tv_value_central(f, 1e-3);
  CHECK(std::abs(a - b) / b < 0.05);
}

TEST_CASE("tv_gradient is zero on constants and flat on ramps") {
  Raster flat(9, 9, 0.3);
  CHECK(max_abs(tv_gradient(flat, 1e-3)) == 0.0);

  Raster ramp(12, 12);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 12; ++c) ramp(r, c) = 0.05 * c;
  const Raster g = tv_gradient(ramp, 1e-3);
  double worst = 0.0;
  for (int r = 2; r < 10; ++r)
    for (int c = 2; c < 10; ++c) worst = std::max(worst, std::abs(g(r, c)));
  CHECK(worst < 1e-12);
}

TEST_CASE("tv_gradient matches finite differences of tv_value") {
  const double eps = 1e-3;
  const Raster f = oracles::random_raster(12, 12, 8);
  const Raster g = tv_gradient(f, eps);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Raster dir = oracles::random_raster(12, 12, 100 + s, -1.0, 1.0);
    const double fd = oracles::fd_directional([&](const Raster& x) { return tv_value(x, eps); },
                                              f, dir, 1e-6);
    const double an = dot(g, dir);
    CHECK(std::abs(fd - an) / (std::abs(fd) + 1e-12) < 1e-4);
  }
}

TEST_CASE("texture gradient matches finite differences of the data energy") {
  const SmallProblem p = nontrivial_problem({8, 8}, 2, 200);
  const ModelState st = p.state();
  const LatticeSpec& spec = p.bank.spec();
  const Texture f = make_texture(
      oracles::random_raster(spec.texture_extent.r, spec.texture_extent.c, 201, 0.2, 0.8), spec);
  std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 202),
                               oracles::random_feasible_kernel({3, 3}, 203)};
  const Raster grad = data_gradient_texture(st, f, ks);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Raster dir = oracles::random_raster(spec.texture_extent.r, spec.texture_extent.c,
                                              300 + s, -1.0, 1.0);
    const double fd = oracles::fd_directional(
        [&](const Raster& x) { return data_energy(st, Texture{x, spec}, ks); }, f.values, dir,
        1e-5);
    const double an = dot(grad, dir);
    CHECK(std::abs(fd - an) / (std::abs(fd) + 1e-12) < 1e-4);
  }
}

TEST_CASE("kernel gradient matches finite differences of the patch energy") {
  const SmallProblem p = nontrivial_problem({8, 8}, 2, 210);
  const ModelState st = p.state();
  const LatticeSpec& spec = p.bank.spec();
  const Texture f = make_texture(
      oracles::random_raster(spec.texture_extent.r, spec.texture_extent.c, 211, 0.2, 0.8), spec);
  std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 212),
                               oracles::random_feasible_kernel({3, 3}, 213)};
  const double lambda_p = 500.0;
  const int i = 0;
  const MotionKernel grad = patch_gradient_kernel(st, f, ks[i], i, ks, lambda_p);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Raster dir = oracles::random_raster(3, 3, 400 + s, -1.0, 1.0);
    const double fd = oracles::fd_directional(
        [&](const Raster& w) {
          MotionKernel h = ks[i];
          h.weights = w;
          return patch_energy(st, f, h, i, ks, lambda_p);
        },
        ks[i].weights, dir, 1e-5);
    const double an = dot(grad.weights, dir);
    CHECK(std::abs(fd - an) / (std::abs(fd) + 1e-12) < 1e-4);
  }
}

TEST_CASE("update_texture leaves a perfect fit untouched when lambda is zero") {
  SmallProblem p = nontrivial_problem({6, 6}, 1, 220);
  const LatticeSpec& spec = p.bank.spec();
  const Texture f = make_texture(
      oracles::random_raster(spec.texture_extent.r, spec.texture_extent.c, 221, 0.2, 0.8), spec);
  std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 222)};
  p.data = forward_full(f, ks, p.bank, p.corr, p.patches);
  const ModelState st = p.state();
  const Texture out = update_texture(st, f, ks, 0.0, 1e-3, 0.5);
  CHECK(max_abs_diff(out.values, f.values) < 1e-12);
}

TEST_CASE("a small texture step reduces the objective") {
  const SmallProblem p = nontrivial_problem({6, 6}, 1, 230);
  const ModelState st = p.state();
  const LatticeSpec& spec = p.bank.spec();
  const Texture f = make_texture(
      oracles::random_raster(spec.texture_extent.r, spec.texture_extent.c, 231, 0.2, 0.8), spec);
  std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 232)};
  const double lambda = 1e-3;
  const double e0 = data_energy(st, f, ks) + lambda * tv_value(f.values, 1e-3);
  const Raster g = data_gradient_texture(st, f, ks);
  const double step = 1e-3 / (max_abs(g) + 1e-30);
  const Texture f1 = update_texture(st, f, ks, lambda, 1e-3, step);
  const double e1 = data_energy(st, f1, ks) + lambda * tv_value(f1.values, 1e-3);
  CHECK(e1 < e0);
}

TEST_CASE("update_kernel is a fixed point at zero residual without coupling") {
  SmallProblem p = nontrivial_problem({6, 6}, 1, 240);
  const LatticeSpec& spec = p.bank.spec();
  const Texture f = make_texture(
      oracles::random_raster(spec.texture_extent.r, spec.texture_extent.c, 241, 0.2, 0.8), spec);
  std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 242)};
  p.data = forward_full(f, ks, p.bank, p.corr, p.patches);
  const ModelState st = p.state();
  const MotionKernel out = update_kernel(st, f, 0, ks, 0.0, 1e-2);
  CHECK(max_abs_diff(out.weights, ks[0].weights) < 1e-12);
}

TEST_CASE("strong patch coupling pulls kernels toward their mean") {
  SmallProblem p = nontrivial_problem({6, 6}, 2, 250);
  p.corr = CorrectionSet::identity(p.bank.spec());  // keep the data term mild
  const LatticeSpec& spec = p.bank.spec();
  const Texture f = make_texture(
      Raster(spec.texture_extent.r, spec.texture_extent.c, 0.5), spec);
  std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 251),
                               oracles::random_feasible_kernel({3, 3}, 252)};
  p.data = forward_full(f, ks, p.bank, p.corr, p.patches);
  const ModelState st = p.state();
  const double d0 = max_abs_diff(ks[0].weights, ks[1].weights);
  std::vector<MotionKernel> cur = ks;
  for (int it = 0; it < 50; ++it) {
    std::vector<MotionKernel> next = cur;
    for (int i = 0; i < 2; ++i) next[i] = update_kernel(st, f, i, cur, 1e6, 4e-7);
    cur = next;
  }
  CHECK(max_abs_diff(cur[0].weights, cur[1].weights) < 0.2 * d0);
}

TEST_CASE("build_pyramid structure") {
  const PsfBank bank = build_psf_bank(desk_suite().camera, blocks_spec({16, 16}));
  const CorrectionSet corr = CorrectionSet::identity(bank.spec());
  DeblurConfig cfg;
  cfg.kernel_extent = {9, 9};
  const LightFieldImage lm{
      Raster(bank.spec().sensor_extent.r, bank.spec().sensor_extent.c, 0.0), bank.spec()};

  cfg.pyramid_levels = 1;
  CHECK(build_pyramid(lm, bank, corr, cfg).size() == 1);

  cfg.pyramid_levels = 3;  // texture units 2x2 allow exactly two levels
  const auto levels = build_pyramid(lm, bank, corr, cfg);
  REQUIRE(levels.size() == 2);
  CHECK(levels[0].spec.texture_extent == Vec2i{32, 32});
  CHECK(levels[1].spec.texture_extent == Vec2i{16, 16});
  CHECK(levels[1].kernel_extent == Vec2i{5, 5});
  CHECK(levels[1].bank.spec().texture_units_per_block == Vec2i{1, 1});

  cfg.kernel_extent = {3, 3};  // coarse extent clamps at 3x3
  CHECK(build_pyramid(lm, bank, corr, cfg)[1].kernel_extent == Vec2i{3, 3});
}

TEST_CASE("deconvolve_known_kernel recovers the texture through a pinhole") {
  CameraConfig cam = desk_suite().camera;
  cam.f_number = std::numeric_limits<double>::infinity();
  const LatticeSpec spec = blocks_spec({12, 12});
  const PsfBank bank = build_psf_bank(cam, spec);
  const CorrectionSet corr = CorrectionSet::identity(spec);
  const PatchLayout patches = PatchLayout::single(spec);
  const Texture gt = make_texture(synth_texture("blobs", spec.texture_extent, 3), spec);
  const std::vector<MotionKernel> deltas{MotionKernel::delta({3, 3})};
  const LightFieldImage lm = forward_full(gt, deltas, bank, corr, patches);
  DeblurConfig cfg;
  cfg.iters_per_level = 400;
  const Texture est = deconvolve_known_kernel(lm, bank, corr, patches, deltas, 0.0, cfg);
  CHECK(psnr(est.values, gt.values) > 40.0);
}

TEST_CASE("deconvolve_known_kernel drives a noise-free data term toward zero") {
  const PsfBank bank = build_psf_bank(desk_suite().camera, blocks_spec({8, 8}));
  const LatticeSpec& spec = bank.spec();
  const CorrectionSet corr = CorrectionSet::identity(spec);
  const PatchLayout patches = PatchLayout::single(spec);
  const Texture gt = make_texture(synth_texture("bricks", spec.texture_extent, 5), spec);
  const std::vector<MotionKernel> ks{oracles::random_feasible_kernel({3, 3}, 260)};
  const LightFieldImage lm = forward_full(gt, ks, bank, corr, patches);
  DeblurConfig cfg;
  cfg.iters_per_level = 600;
  const Texture est = deconvolve_known_kernel(lm, bank, corr, patches, ks, 0.0, cfg);
  const ModelState st{&bank, &corr, &patches, &lm, Boundary::mirror};
  const Texture init{Raster(spec.texture_extent.r, spec.texture_extent.c, 0.5), spec};
  const double e0 = data_energy(st, init, ks);
  CHECK(data_energy(st, est, ks) < 1e-5 * e0);
}

TEST_CASE("deconvolving a constant light field gives a near-constant texture") {
  const PsfBank bank = build_psf_bank(desk_suite().camera, blocks_spec({10, 10}));
  const LatticeSpec& spec = bank.spec();
  const CorrectionSet corr = CorrectionSet::identity(spec);
  const PatchLayout patches = PatchLayout::single(spec);
  const Texture flat = make_texture(Raster(spec.texture_extent.r, spec.texture_extent.c, 0.6),
                                    spec);
  const std::vector<MotionKernel> deltas{MotionKernel::delta({3, 3})};
  const LightFieldImage lm = forward_full(flat, deltas, bank, corr, patches);
  DeblurConfig cfg;
  cfg.iters_per_level = 400;
  const Texture est = deconvolve_known_kernel(lm, bank, corr, patches, deltas, 0.0, cfg);
  double lo = 1.0, hi = 0.0;
  for (int r = 4; r < est.values.rows() - 4; ++r)
    for (int c = 4; c < est.values.cols() - 4; ++c) {
      lo = std::min(lo, est.values(r, c));
      hi = std::max(hi, est.values(r, c));
    }
  CHECK(hi - lo < 0.02);
}

TEST_CASE("blind deconvolution of a blur-free input concentrates kernel mass") {
  const PsfBank bank = build_psf_bank(desk_suite().camera, blocks_spec({12, 12}));
  const LatticeSpec& spec = bank.spec();
  const CorrectionSet corr = CorrectionSet::identity(spec);
  const PatchLayout patches = PatchLayout::single(spec);
  const Texture gt = make_texture(synth_texture("bricks", spec.texture_extent, 6), spec);
  const std::vector<MotionKernel> delta{MotionKernel::delta({5, 5})};
  const LightFieldImage lm = forward_full(gt, delta, bank, corr, patches);
  DeblurConfig cfg;
  cfg.pyramid_levels = 1;
  cfg.iters_per_level = 150;
  cfg.kernel_extent = {5, 5};
  cfg.lambda_alt = 1.6e-3;
  const DeblurResult res = blind_deconvolve(lm, bank, corr, patches, cfg);
  REQUIRE(res.kernels.size() == 1);
  const MotionKernel& k = res.kernels[0];
  CHECK(k.weights(k.center.r, k.center.c) >= 0.9);
  CHECK(kernel_feasible(k));
  CHECK(res.energy_trace.back() < res.energy_trace.front());
}

TEST_CASE("kernels stay feasible and traces stay finite through alternation") {
  const PsfBank bank = build_psf_bank(desk_suite().camera, blocks_spec({10, 10}));
  const LatticeSpec& spec = bank.spec();
  const CorrectionSet corr = CorrectionSet::identity(spec);
  const PatchLayout patches = PatchLayout::grid(spec, {1, 2});
  const Texture gt = make_texture(synth_texture("strokes", spec.texture_extent, 7), spec);
  const MotionKernel blur = synth_motion_kernel("line9", 1);
  const LightFieldImage lm = forward_full(gt, {blur, blur}, bank, corr, patches);
  DeblurConfig cfg;
  cfg.pyramid_levels = 2;
  cfg.iters_per_level = 60;
  cfg.kernel_extent = {9, 9};
  const DeblurResult res = blind_deconvolve(lm, bank, corr, patches, cfg);
  for (const MotionKernel& k : res.kernels) {
    CHECK(min_value(k.weights) >= 0.0);
    CHECK(kernel_feasible(k, 1e-12));
  }
  for (double e : res.energy_trace) CHECK(std::isfinite(e));
}

TEST_CASE("identical patch data drives per-patch kernels to agree") {
  // a periodic texture makes both patch halves statistically identical;
  // with coupling on, kernels should stay numerically close
  const PsfBank bank = build_psf_bank(desk_suite().camera, blocks_spec({12, 12}));
  const LatticeSpec& spec = bank.spec();
  const CorrectionSet corr = CorrectionSet::identity(spec);
  const PatchLayout patches = PatchLayout::grid(spec, {1, 2});
  Raster tex(spec.texture_extent.r, spec.texture_extent.c);
  for (int r = 0; r < tex.rows(); ++r)
    for (int c = 0; c < tex.cols(); ++c)
      tex(r, c) = 0.5 + 0.35 * std::sin(0.9 * r) * std::sin(0.9 * (c % 12));
  const Texture gt = make_texture(tex, spec);
  const MotionKernel blur = synth_motion_kernel("line9", 1);
  const LightFieldImage lm = forward_full(gt, {blur, blur}, bank, corr, patches);
  DeblurConfig cfg;
  cfg.pyramid_levels = 1;
  cfg.iters_per_level = 80;
  cfg.kernel_extent = {9, 9};
  cfg.lambda_patch = 4000.0;
  const DeblurResult res = blind_deconvolve(lm, bank, corr, patches, cfg);
  CHECK(max_abs_diff(res.kernels[0].weights, res.kernels[1].weights) < 0.05);
}
