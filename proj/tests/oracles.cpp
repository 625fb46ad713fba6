#include "oracles.hpp"

#include <cmath>
#include <random>

namespace oracles {

namespace {

int mirror(int i, int n) {
  while (i < 0 || i >= n) i = (i < 0) ? -1 - i : 2 * n - 1 - i;
  return i;
}

}  // namespace

Raster dense_render(const PsfBank& bank, const Raster& g, Boundary b) {
  const LatticeSpec& spec = bank.spec();
  const int radius = bank.support_radius();
  const Vec2i td = spec.texture_units_per_block;
  const Vec2i ext = spec.texture_extent;
  const int pad_r = radius * td.r, pad_c = radius * td.c;
  Raster out(spec.sensor_extent.r, spec.sensor_extent.c, 0.0);
  for (int xr = 0; xr < out.rows(); ++xr)
    for (int xc = 0; xc < out.cols(); ++xc) {
      long double acc = 0.0L;
      for (int pr = -pad_r; pr < ext.r + pad_r; ++pr)
        for (int pc = -pad_c; pc < ext.c + pad_c; ++pc) {
          const double w = eval_psf(bank, {xr, xc}, {pr, pc});
          if (w == 0.0) continue;
          double v;
          if (b == Boundary::mirror) {
            v = g(mirror(pr, ext.r), mirror(pc, ext.c));
          } else {
            if (pr < 0 || pr >= ext.r || pc < 0 || pc >= ext.c) continue;
            v = g(pr, pc);
          }
          acc += static_cast<long double>(w) * v;
        }
      out(xr, xc) = static_cast<double>(acc);
    }
  return out;
}

Raster dense_render_adjoint(const PsfBank& bank, const Raster& r, Boundary b) {
  const LatticeSpec& spec = bank.spec();
  const int radius = bank.support_radius();
  const Vec2i td = spec.texture_units_per_block;
  const Vec2i ext = spec.texture_extent;
  const int pad_r = radius * td.r, pad_c = radius * td.c;
  Raster out(ext.r, ext.c, 0.0);
  for (int xr = 0; xr < r.rows(); ++xr)
    for (int xc = 0; xc < r.cols(); ++xc) {
      const double rv = r(xr, xc);
      if (rv == 0.0) continue;
      for (int pr = -pad_r; pr < ext.r + pad_r; ++pr)
        for (int pc = -pad_c; pc < ext.c + pad_c; ++pc) {
          const double w = eval_psf(bank, {xr, xc}, {pr, pc});
          if (w == 0.0) continue;
          if (b == Boundary::mirror) {
            out(mirror(pr, ext.r), mirror(pc, ext.c)) += w * rv;
          } else {
            if (pr < 0 || pr >= ext.r || pc < 0 || pc >= ext.c) continue;
            out(pr, pc) += w * rv;
          }
        }
    }
  return out;
}

Raster naive_motion_convolve(const Raster& f, const MotionKernel& k) {
  Raster out(f.rows(), f.cols(), 0.0);
  for (int r = 0; r < f.rows(); ++r)
    for (int c = 0; c < f.cols(); ++c) {
      long double acc = 0.0L;
      for (int qr = 0; qr < k.weights.rows(); ++qr)
        for (int qc = 0; qc < k.weights.cols(); ++qc) {
          const int sr = mirror(r - (qr - k.center.r), f.rows());
          const int sc = mirror(c - (qc - k.center.c), f.cols());
          acc += static_cast<long double>(k.weights(qr, qc)) * f(sr, sc);
        }
      out(r, c) = static_cast<double>(acc);
    }
  return out;
}

namespace {

struct OracleOptics {
  double v, o, kappa, s, mag, r_main;
};

OracleOptics oracle_optics(const CameraConfig& cam) {
  OracleOptics oo;
  oo.v = 1.0 / (1.0 / cam.main_lens_focal_length - 1.0 / cam.scene_depth);
  oo.o = cam.lens_to_mla_distance - oo.v;
  oo.kappa = 1.0 / cam.microlens_focal_length - 1.0 / oo.o;
  oo.s = 1.0 - cam.mla_to_sensor_distance * oo.kappa;
  oo.mag = oo.v / cam.lens_to_mla_distance;
  oo.r_main = std::isinf(cam.f_number)
                  ? 0.0
                  : 0.5 * (cam.main_lens_focal_length / cam.f_number) * std::abs(oo.o) / oo.v;
  return oo;
}

}  // namespace

Raster disc_psf_footprint(const CameraConfig& cam, const LatticeSpec& spec, Vec2i t, int radius,
                          int samples) {
  const PhysicalLayout geo = physical_layout(cam, spec);
  const OracleOptics oo = oracle_optics(cam);
  const double d2 = cam.mla_to_sensor_distance;
  const Vec2i jd = spec.pixels_per_block;
  const Vec2i td = spec.texture_units_per_block;

  const Vec2d pos{(t.r + 0.5) * geo.block_size.r / td.r, (t.c + 0.5) * geo.block_size.c / td.c};
  const Vec2d p_lat{pos.r * oo.mag, pos.c * oo.mag};
  const double r_ap = geo.aperture_radius;

  const int side_r = (2 * radius + 1) * jd.r;
  const int side_c = (2 * radius + 1) * jd.c;
  const int origin_r = radius * jd.r;  // pixel (0,0) of block (0,0)
  const int origin_c = radius * jd.c;
  Raster out(side_r, side_c, 0.0);

  // candidate microlens centres within reach of the main blur disc
  std::vector<Vec2d> centres;
  const double reach = oo.r_main + 2 * r_ap;
  const int br0 = static_cast<int>(std::floor((pos.r - reach) / geo.block_size.r)) - 1;
  const int br1 = static_cast<int>(std::floor((pos.r + reach) / geo.block_size.r)) + 1;
  const int bc0 = static_cast<int>(std::floor((pos.c - reach) / geo.block_size.c)) - 1;
  const int bc1 = static_cast<int>(std::floor((pos.c + reach) / geo.block_size.c)) + 1;
  for (int br = br0; br <= br1; ++br)
    for (int bc = bc0; bc <= bc1; ++bc)
      for (int which = 0; which < spec.lenses_per_block(); ++which) {
        const Vec2d rel = spec.lens_center(which);
        centres.push_back({(br + rel.r) * geo.block_size.r, (bc + rel.c) * geo.block_size.c});
      }

  for (const Vec2d& c : centres) {
    const double d = std::hypot(c.r - pos.r, c.c - pos.c);
    if (d >= oo.r_main + r_ap) continue;
    // sensor-plane bounding box of this lens' defocus disc
    const double dk = d2 * oo.kappa;
    const double dof = d2 / oo.o;
    auto fwd = [&](Vec2d a) {
      return Vec2d{oo.s * a.r + dk * c.r - dof * (p_lat.r - c.r),
                   oo.s * a.c + dk * c.c - dof * (p_lat.c - c.c)};
    };
    const Vec2d ctr = fwd(c);
    const double rad_r = std::abs(oo.s) * std::min(oo.r_main + d, r_ap);
    const int pr0 = static_cast<int>(std::floor((ctr.r - rad_r) / geo.pixel_pitch.r));
    const int pr1 = static_cast<int>(std::floor((ctr.r + rad_r) / geo.pixel_pitch.r));
    const int pc0 = static_cast<int>(std::floor((ctr.c - rad_r) / geo.pixel_pitch.c));
    const int pc1 = static_cast<int>(std::floor((ctr.c + rad_r) / geo.pixel_pitch.c));
    for (int pr = pr0; pr <= pr1; ++pr)
      for (int pc = pc0; pc <= pc1; ++pc) {
        const int rr = pr + origin_r, cc = pc + origin_c;
        if (rr < 0 || rr >= side_r || cc < 0 || cc >= side_c) continue;
        long double hits = 0.0L;
        for (int ir = 0; ir < samples; ++ir)
          for (int ic = 0; ic < samples; ++ic) {
            const Vec2d xi{(pr + (ir + 0.5) / samples) * geo.pixel_pitch.r,
                           (pc + (ic + 0.5) / samples) * geo.pixel_pitch.c};
            // invert the aperture-to-sensor map
            const Vec2d a{(xi.r - dk * c.r + dof * (p_lat.r - c.r)) / oo.s,
                          (xi.c - dk * c.c + dof * (p_lat.c - c.c)) / oo.s};
            const double da = std::hypot(a.r - pos.r, a.c - pos.c);
            const double dc = std::hypot(a.r - c.r, a.c - c.c);
            if (da <= oo.r_main && dc <= r_ap) hits += 1.0L;
          }
        out(rr, cc) += static_cast<double>(hits) / (samples * samples);
      }
  }

  const double total = sum(out);
  if (total > 0)
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] /= total;
  return out;
}

Raster bank_psf_footprint(const PsfBank& bank, Vec2i t, int radius) {
  const LatticeSpec& spec = bank.spec();
  const Vec2i jd = spec.pixels_per_block;
  const int side_r = (2 * radius + 1) * jd.r;
  const int side_c = (2 * radius + 1) * jd.c;
  Raster out(side_r, side_c, 0.0);
  const int rsup = bank.support_radius();
  for (int kr = -radius; kr <= radius; ++kr)
    for (int kc = -radius; kc <= radius; ++kc) {
      if (kr < -rsup || kr > rsup || kc < -rsup || kc > rsup) continue;
      for (int jr = 0; jr < jd.r; ++jr)
        for (int jc = 0; jc < jd.c; ++jc)
          out((kr + radius) * jd.r + jr, (kc + radius) * jd.c + jc) =
              bank.kernel({jr, jc}, t)(kr + rsup, kc + rsup);
    }
  return out;
}

double tv_value_central(const Raster& f, double eps) {
  long double acc = 0.0L;
  for (int r = 0; r < f.rows(); ++r)
    for (int c = 0; c < f.cols(); ++c) {
      const int cp = std::min(c + 1, f.cols() - 1), cm = std::max(c - 1, 0);
      const int rp = std::min(r + 1, f.rows() - 1), rm = std::max(r - 1, 0);
      const double fx = 0.5 * (f(r, cp) - f(r, cm));
      const double fy = 0.5 * (f(rp, c) - f(rm, c));
      acc += std::sqrt(fx * fx + fy * fy + eps * eps);
    }
  return static_cast<double>(acc);
}

double ssim_direct(const Raster& a, const Raster& b) {
  const int win = 11;
  const double sigma = 1.5;
  double w[11][11];
  double wsum = 0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double dr = i - 5.0, dc = j - 5.0;
      w[i][j] = std::exp(-(dr * dr + dc * dc) / (2 * sigma * sigma));
      wsum += w[i][j];
    }
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) w[i][j] /= wsum;
  const double c1 = 1e-4, c2 = 9e-4;
  long double acc = 0.0L;
  int count = 0;
  for (int r = 0; r + win <= a.rows(); ++r)
    for (int c = 0; c + win <= a.cols(); ++c) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          ma += w[i][j] * a(r + i, c + j);
          mb += w[i][j] * b(r + i, c + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          va += w[i][j] * (a(r + i, c + j) - ma) * (a(r + i, c + j) - ma);
          vb += w[i][j] * (b(r + i, c + j) - mb) * (b(r + i, c + j) - mb);
          cov += w[i][j] * (a(r + i, c + j) - ma) * (b(r + i, c + j) - mb);
        }
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return static_cast<double>(acc / count);
}

double fd_directional(const std::function<double(const Raster&)>& fn, const Raster& x,
                      const Raster& dir, double h) {
  Raster plus = x, minus = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    plus.data()[i] += h * dir.data()[i];
    minus.data()[i] -= h * dir.data()[i];
  }
  return (fn(plus) - fn(minus)) / (2 * h);
}

Raster random_raster(int rows, int cols, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Raster out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = u(rng);
  return out;
}

MotionKernel random_feasible_kernel(Vec2i extent, std::uint64_t seed) {
  MotionKernel k;
  k.weights = random_raster(extent.r, extent.c, seed, 0.0, 1.0);
  k.center = {extent.r / 2, extent.c / 2};
  return project_kernel(k);
}

}  // namespace oracles
