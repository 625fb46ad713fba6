#include "lfdeblur/forward.hpp"

#include <cmath>

#include "lfdeblur/errors.hpp"
#include "lfdeblur/parallel.hpp"

namespace lfdeblur {

namespace {

int mirror_idx(int i, int n) {
  while (i < 0 || i >= n) i = (i < 0) ? -1 - i : 2 * n - 1 - i;
  return i;
}

/// Per-axis source-index tables for every displacement a kernel can reach.
/// Entry -1 means the tap falls outside under zero boundary handling.
struct AxisMaps {
  int margin;
  int n;
  std::vector<int> table;  // (2*margin+1) rows of n entries

  AxisMaps(int n_, int margin_, Boundary b) : margin(margin_), n(n_) {
    table.resize(static_cast<std::size_t>(2 * margin + 1) * n);
    for (int d = -margin; d <= margin; ++d)
      for (int i = 0; i < n; ++i) {
        const int s = i - d;
        int v;
        if (s >= 0 && s < n)
          v = s;
        else
          v = (b == Boundary::mirror) ? mirror_idx(s, n) : -1;
        table[static_cast<std::size_t>(d + margin) * n + i] = v;
      }
  }

  const int* row(int d) const { return &table[static_cast<std::size_t>(d + margin) * n]; }
};

std::vector<PsfBank::Tap> motion_taps(const MotionKernel& k, bool keep_zeros) {
  std::vector<PsfBank::Tap> taps;
  taps.reserve(k.weights.size());
  for (int r = 0; r < k.weights.rows(); ++r)
    for (int c = 0; c < k.weights.cols(); ++c) {
      const double w = k.weights(r, c);
      if (keep_zeros || w != 0.0) taps.push_back({r - k.center.r, c - k.center.c, w});
    }
  return taps;
}

int taps_margin(const std::vector<PsfBank::Tap>& taps) {
  int m = 0;
  for (const auto& t : taps) m = std::max({m, std::abs(t.dr), std::abs(t.dc)});
  return m;
}

Raster conv2_mapped(const Raster& in, const std::vector<PsfBank::Tap>& taps, Boundary b) {
  const int rows = in.rows(), cols = in.cols();
  Raster out(rows, cols, 0.0);
  const int m = taps_margin(taps);
  const AxisMaps mr(rows, m, b), mc(cols, m, b);
  for (const auto& t : taps) {
    const int* rmap = mr.row(t.dr);
    const int* cmap = mc.row(t.dc);
    for (int r = 0; r < rows; ++r) {
      if (rmap[r] < 0) continue;
      const double* src = &in(rmap[r], 0);
      double* dst = &out(r, 0);
      for (int c = 0; c < cols; ++c) {
        const int sc = cmap[c];
        if (sc >= 0) dst[c] += t.w * src[sc];
      }
    }
  }
  return out;
}

Raster conv2_mapped_adjoint(const Raster& g, const std::vector<PsfBank::Tap>& taps, Boundary b) {
  const int rows = g.rows(), cols = g.cols();
  Raster out(rows, cols, 0.0);
  const int m = taps_margin(taps);
  const AxisMaps mr(rows, m, b), mc(cols, m, b);
  for (const auto& t : taps) {
    const int* rmap = mr.row(t.dr);
    const int* cmap = mc.row(t.dc);
    for (int r = 0; r < rows; ++r) {
      if (rmap[r] < 0) continue;
      double* dst = &out(rmap[r], 0);
      const double* src = &g(r, 0);
      for (int c = 0; c < cols; ++c) {
        const int sc = cmap[c];
        if (sc >= 0) dst[sc] += t.w * src[c];
      }
    }
  }
  return out;
}

void check_texture(const Texture& f) {
  f.spec.validate();
  if (f.values.rows() != f.spec.texture_extent.r || f.values.cols() != f.spec.texture_extent.c)
    throw ValidationError("texture extent does not match its lattice spec");
}

void check_lf(const LightFieldImage& l) {
  l.spec.validate();
  if (l.values.rows() != l.spec.sensor_extent.r || l.values.cols() != l.spec.sensor_extent.c)
    throw ValidationError("light-field extent does not match its lattice spec");
}

/// Flat texture index feeding padded block pb at phase t; -1 for dropped
/// zero-boundary taps. Mirroring happens at sample granularity, so padding a
/// phase plane may read from a different phase of the texture.
int phase_source(const LatticeSpec& spec, Boundary b, Vec2i pb, Vec2i t) {
  const Vec2i d = spec.texture_units_per_block;
  int sr = pb.r * d.r + t.r;
  int sc = pb.c * d.c + t.c;
  const Vec2i ext = spec.texture_extent;
  if (b == Boundary::mirror) {
    sr = mirror_idx(sr, ext.r);
    sc = mirror_idx(sc, ext.c);
  } else if (sr < 0 || sr >= ext.r || sc < 0 || sc >= ext.c) {
    return -1;
  }
  return sr * ext.c + sc;
}

}  // namespace

Texture make_texture(Raster values, const LatticeSpec& spec) {
  Texture t{std::move(values), spec};
  check_texture(t);
  return t;
}

LightFieldImage make_lf_image(Raster values, const LatticeSpec& spec) {
  LightFieldImage l{std::move(values), spec};
  check_lf(l);
  return l;
}

Texture motion_convolve(const Texture& f, const MotionKernel& k, Boundary b) {
  check_texture(f);
  return {conv2_mapped(f.values, motion_taps(k, false), b), f.spec};
}

Texture motion_convolve_adjoint(const Texture& r, const MotionKernel& k, Boundary b) {
  check_texture(r);
  return {conv2_mapped_adjoint(r.values, motion_taps(k, false), b), r.spec};
}

MotionKernel motion_kernel_gradient(const Texture& f, const Texture& r, Vec2i extent, Vec2i center,
                                    Boundary b) {
  check_texture(f);
  check_texture(r);
  if (!f.values.same_extent(r.values))
    throw ValidationError("motion_kernel_gradient: extent mismatch");
  MotionKernel g;
  g.weights = Raster(extent.r, extent.c, 0.0);
  g.center = center;
  const int rows = f.values.rows(), cols = f.values.cols();
  const int m = std::max({std::abs(0 - center.r), std::abs(extent.r - 1 - center.r),
                          std::abs(0 - center.c), std::abs(extent.c - 1 - center.c)});
  const AxisMaps mrow(rows, m, b), mcol(cols, m, b);
  for (int qr = 0; qr < extent.r; ++qr)
    for (int qc = 0; qc < extent.c; ++qc) {
      const int* rmap = mrow.row(qr - center.r);
      const int* cmap = mcol.row(qc - center.c);
      long double acc = 0.0L;
      for (int row = 0; row < rows; ++row) {
        if (rmap[row] < 0) continue;
        const double* fp = &f.values(rmap[row], 0);
        const double* rp = &r.values(row, 0);
        for (int col = 0; col < cols; ++col) {
          const int sc = cmap[col];
          if (sc >= 0) acc += static_cast<long double>(rp[col]) * fp[sc];
        }
      }
      g.weights(qr, qc) = static_cast<double>(acc);
    }
  return g;
}

namespace {

Raster render_lf_raster(const Raster& g, const PsfBank& bank, Boundary b) {
  const LatticeSpec& spec = bank.spec();
  const Vec2i blocks = spec.block_count();
  const Vec2i jd = spec.pixels_per_block;
  const Vec2i td = spec.texture_units_per_block;
  const int radius = bank.support_radius();
  const int pr = blocks.r + 2 * radius, pc = blocks.c + 2 * radius;

  std::vector<Raster> phase(static_cast<std::size_t>(td.r) * td.c, Raster(pr, pc, 0.0));
  for (int tr = 0; tr < td.r; ++tr)
    for (int tc = 0; tc < td.c; ++tc) {
      Raster& p = phase[tr * td.c + tc];
      for (int br = -radius; br < blocks.r + radius; ++br)
        for (int bc = -radius; bc < blocks.c + radius; ++bc) {
          const int src = phase_source(spec, b, {br, bc}, {tr, tc});
          if (src >= 0) p(br + radius, bc + radius) = g.data()[src];
        }
    }

  Raster out(spec.sensor_extent.r, spec.sensor_extent.c, 0.0);
  parallel_for(jd.r * jd.c, [&](int v) {
    const Vec2i j{v / jd.c, v % jd.c};
    Raster acc(blocks.r, blocks.c, 0.0);
    for (int tr = 0; tr < td.r; ++tr)
      for (int tc = 0; tc < td.c; ++tc) {
        const Raster& p = phase[tr * td.c + tc];
        for (const auto& tap : bank.taps(j, {tr, tc})) {
          for (int kr = 0; kr < blocks.r; ++kr) {
            const double* src = &p(kr - tap.dr + radius, radius - tap.dc);
            double* dst = &acc(kr, 0);
            for (int kc = 0; kc < blocks.c; ++kc) dst[kc] += tap.w * src[kc];
          }
        }
      }
    for (int kr = 0; kr < blocks.r; ++kr)
      for (int kc = 0; kc < blocks.c; ++kc)
        out(kr * jd.r + j.r, kc * jd.c + j.c) = acc(kr, kc);
  });
  return out;
}

Raster render_lf_adjoint_raster(const Raster& r, const PsfBank& bank, Boundary b) {
  const LatticeSpec& spec = bank.spec();
  const Vec2i blocks = spec.block_count();
  const Vec2i jd = spec.pixels_per_block;
  const Vec2i td = spec.texture_units_per_block;
  const int radius = bank.support_radius();
  const int pr = blocks.r + 2 * radius, pc = blocks.c + 2 * radius;

  std::vector<Raster> views(static_cast<std::size_t>(jd.r) * jd.c, Raster(blocks.r, blocks.c));
  for (int jr = 0; jr < jd.r; ++jr)
    for (int jc = 0; jc < jd.c; ++jc) {
      Raster& v = views[jr * jd.c + jc];
      for (int kr = 0; kr < blocks.r; ++kr)
        for (int kc = 0; kc < blocks.c; ++kc) v(kr, kc) = r(kr * jd.r + jr, kc * jd.c + jc);
    }

  std::vector<Raster> scatter(static_cast<std::size_t>(td.r) * td.c, Raster(pr, pc, 0.0));
  parallel_for(td.r * td.c, [&](int ti) {
    const Vec2i t{ti / td.c, ti % td.c};
    Raster& z = scatter[ti];
    for (int jr = 0; jr < jd.r; ++jr)
      for (int jc = 0; jc < jd.c; ++jc) {
        const Raster& v = views[jr * jd.c + jc];
        for (const auto& tap : bank.taps({jr, jc}, t)) {
          for (int kr = 0; kr < blocks.r; ++kr) {
            double* dst = &z(kr - tap.dr + radius, radius - tap.dc);
            const double* src = &v(kr, 0);
            for (int kc = 0; kc < blocks.c; ++kc) dst[kc] += tap.w * src[kc];
          }
        }
      }
  });

  Raster out(spec.texture_extent.r, spec.texture_extent.c, 0.0);
  for (int tr = 0; tr < td.r; ++tr)
    for (int tc = 0; tc < td.c; ++tc) {
      const Raster& z = scatter[tr * td.c + tc];
      for (int br = -radius; br < blocks.r + radius; ++br)
        for (int bc = -radius; bc < blocks.c + radius; ++bc) {
          const int src = phase_source(spec, b, {br, bc}, {tr, tc});
          if (src >= 0) out.data()[src] += z(br + radius, bc + radius);
        }
    }
  return out;
}

}  // namespace

LightFieldImage render_lf(const Texture& g, const PsfBank& bank, Boundary b) {
  check_texture(g);
  if (!(g.spec == bank.spec()))
    throw ValidationError("render_lf: texture lattice does not match the PSF bank");
  return {render_lf_raster(g.values, bank, b), bank.spec()};
}

Texture render_lf_adjoint(const LightFieldImage& r, const PsfBank& bank, Boundary b) {
  check_lf(r);
  if (!(r.spec == bank.spec()))
    throw ValidationError("render_lf_adjoint: image lattice does not match the PSF bank");
  return {render_lf_adjoint_raster(r.values, bank, b), bank.spec()};
}

void SparseResampler::init(Vec2i out_extent, Vec2i in_extent) {
  out_extent_ = out_extent;
  in_extent_ = in_extent;
  offsets_.clear();
  offsets_.reserve(static_cast<std::size_t>(out_extent.r) * out_extent.c + 1);
  offsets_.push_back(0);
  entries_.clear();
  validity_ = Raster(out_extent.r, out_extent.c, 0.0);
}

void SparseResampler::push_pixel(Vec2i out_px, Vec2d src) {
  const int r0 = static_cast<int>(std::floor(src.r));
  const int c0 = static_cast<int>(std::floor(src.c));
  const double fr = src.r - r0;
  const double fc = src.c - c0;
  const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
  const int rr[4] = {r0, r0, r0 + 1, r0 + 1};
  const int cc[4] = {c0, c0 + 1, c0, c0 + 1};
  bool valid = true;
  for (int i = 0; i < 4; ++i) {
    if (w[i] == 0.0) continue;
    if (rr[i] < 0 || rr[i] >= in_extent_.r || cc[i] < 0 || cc[i] >= in_extent_.c) {
      valid = false;
      continue;
    }
    entries_.push_back({rr[i] * in_extent_.c + cc[i], w[i]});
  }
  offsets_.push_back(static_cast<int>(entries_.size()));
  validity_(out_px.r, out_px.c) = valid ? 1.0 : 0.0;
}

Raster SparseResampler::apply(const Raster& in) const {
  if (in.rows() != in_extent_.r || in.cols() != in_extent_.c)
    throw ValidationError("SparseResampler::apply: extent mismatch");
  Raster out(out_extent_.r, out_extent_.c, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (int e = offsets_[i]; e < offsets_[i + 1]; ++e)
      acc += entries_[e].w * in.data()[entries_[e].src];
    out.data()[i] = acc;
  }
  return out;
}

Raster SparseResampler::apply_adjoint(const Raster& out) const {
  if (out.rows() != out_extent_.r || out.cols() != out_extent_.c)
    throw ValidationError("SparseResampler::apply_adjoint: extent mismatch");
  Raster in(in_extent_.r, in_extent_.c, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out.data()[i];
    if (v == 0.0) continue;
    for (int e = offsets_[i]; e < offsets_[i + 1]; ++e)
      in.data()[entries_[e].src] += entries_[e].w * v;
  }
  return in;
}

bool is_identity_warp(const AffineWarp& w) { return w == kIdentityWarp; }

double warp_determinant(const AffineWarp& w) { return w[0] * w[4] - w[1] * w[3]; }

SparseResampler make_warp_resampler(Vec2i extent, const AffineWarp& w, MapDirection dir) {
  const double det = warp_determinant(w);
  if (std::abs(det) < 1e-12) throw ValidationError("warp matrix is singular");
  if (dir == MapDirection::inverse) {
    return SparseResampler::build(extent, extent, [&](Vec2i p) {
      return Vec2d{w[0] * p.r + w[1] * p.c + w[2], w[3] * p.r + w[4] * p.c + w[5]};
    });
  }
  // forward resampling pulls each raw pixel from its model-grid preimage
  const double ia = w[4] / det, ib = -w[1] / det, ic = -w[3] / det, id = w[0] / det;
  return SparseResampler::build(extent, extent, [&](Vec2i p) {
    const double r = p.r - w[2], c = p.c - w[5];
    return Vec2d{ia * r + ib * c, ic * r + id * c};
  });
}

namespace {

double radial_scale(double rho, double k1, double k2) {
  const double r2 = rho * rho;
  return 1.0 + k1 * r2 + k2 * r2 * r2;
}

/// Solves u * (1 + k1 u^2 + k2 u^4) = rho_d for u >= 0.
double radial_invert(double rho_d, double k1, double k2) {
  double u = rho_d;
  for (int it = 0; it < 50; ++it) {
    const double u2 = u * u;
    const double f = u * (1.0 + k1 * u2 + k2 * u2 * u2) - rho_d;
    const double df = 1.0 + 3.0 * k1 * u2 + 5.0 * k2 * u2 * u2;
    if (std::abs(df) < 1e-12) break;
    const double step = f / df;
    u -= step;
    if (u < 0.0) u = 0.0;
    if (std::abs(step) < 1e-14) break;
  }
  const double u2 = u * u;
  if (std::abs(u * (1.0 + k1 * u2 + k2 * u2 * u2) - rho_d) > 1e-9)
    throw ValidationError("radial distortion is not invertible over the image extent");
  return u;
}

}  // namespace

SparseResampler make_radial_resampler(Vec2i extent, Vec2d center, double k1, double k2,
                                      MapDirection dir) {
  const double r_norm = 0.5 * std::hypot(static_cast<double>(extent.r), static_cast<double>(extent.c));
  return SparseResampler::build(extent, extent, [&](Vec2i p) {
    const double dr = p.r - center.r, dc = p.c - center.c;
    const double rad = std::hypot(dr, dc);
    if (rad == 0.0) return Vec2d{center.r, center.c};
    const double rho = rad / r_norm;
    double rho_src;
    if (dir == MapDirection::forward)
      rho_src = radial_invert(rho, k1, k2);
    else
      rho_src = rho * radial_scale(rho, k1, k2);
    const double s = rho_src * r_norm / rad;
    return Vec2d{center.r + dr * s, center.c + dc * s};
  });
}

LightFieldImage apply_warp(const LightFieldImage& img, const AffineWarp& warp, MapDirection dir) {
  check_lf(img);
  if (is_identity_warp(warp)) return img;
  const SparseResampler rs = make_warp_resampler(img.spec.sensor_extent, warp, dir);
  return {rs.apply(img.values), img.spec};
}

Texture apply_radial(const Texture& g, Vec2d center, double k1, double k2, MapDirection dir) {
  check_texture(g);
  if (k1 == 0.0 && k2 == 0.0) return g;
  const SparseResampler rs = make_radial_resampler(g.spec.texture_extent, center, k1, k2, dir);
  return {rs.apply(g.values), g.spec};
}

CorrectionSet CorrectionSet::identity(const LatticeSpec& spec) {
  CorrectionSet c;
  c.warp = kIdentityWarp;
  c.radial_center = {0.5 * (spec.texture_extent.r - 1), 0.5 * (spec.texture_extent.c - 1)};
  c.mask = Raster(spec.sensor_extent.r, spec.sensor_extent.c, 1.0);
  c.white = Raster(spec.sensor_extent.r, spec.sensor_extent.c, 1.0);
  return c;
}

void CorrectionSet::validate(const LatticeSpec& spec) const {
  if (std::abs(warp_determinant(warp)) < 1e-12)
    throw ValidationError("CorrectionSet: warp matrix is singular");
  if (mask.rows() != spec.sensor_extent.r || mask.cols() != spec.sensor_extent.c)
    throw ValidationError("CorrectionSet: mask extent mismatch");
  if (white.rows() != spec.sensor_extent.r || white.cols() != spec.sensor_extent.c)
    throw ValidationError("CorrectionSet: white extent mismatch");
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double m = mask.data()[i];
    if (m != 0.0 && m != 1.0) throw ValidationError("CorrectionSet: mask must be binary");
    if (m == 1.0 && white.data()[i] <= 0.0)
      throw ValidationError("CorrectionSet: white gain must be positive under the mask");
  }
}

Raster build_mask(const LightFieldImage& white, const LightFieldImage& dark, double threshold,
                  double hot_level) {
  check_lf(white);
  check_lf(dark);
  if (!white.values.same_extent(dark.values))
    throw ValidationError("build_mask: white and dark extents differ");
  const LatticeSpec& spec = white.spec;
  const double cutoff = threshold * max_value(white.values);
  Raster mask(white.values.rows(), white.values.cols(), 1.0);
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) {
      const BlockIndex bi = decompose({r, c}, spec, Domain::sensor);
      const bool border = bi.offset.r == 0 || bi.offset.r == spec.pixels_per_block.r - 1 ||
                          bi.offset.c == 0 || bi.offset.c == spec.pixels_per_block.c - 1;
      if (border || white.values(r, c) < cutoff || dark.values(r, c) > hot_level)
        mask(r, c) = 0.0;
    }
  return mask;
}

LightFieldImage normalize_white(const LightFieldImage& raw, const LightFieldImage& white,
                                const Raster& mask) {
  check_lf(raw);
  check_lf(white);
  if (!raw.values.same_extent(white.values) || !raw.values.same_extent(mask))
    throw ValidationError("normalize_white: extent mismatch");
  Raster out(raw.values.rows(), raw.values.cols(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask.data()[i] == 1.0 && white.values.data()[i] > 0.0)
      out.data()[i] = raw.values.data()[i] / white.values.data()[i];
  return {std::move(out), raw.spec};
}

namespace {

/// Hann window over [0, n) sampled at cell centres; strictly positive inside.
double hann(int i, int n) {
  return 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * (i + 0.5) / n);
}

}  // namespace

PatchLayout PatchLayout::single(const LatticeSpec& spec) {
  PatchLayout layout;
  Patch p;
  p.lo = {0, 0};
  p.hi = spec.sensor_extent;
  p.tex_lo = {0, 0};
  p.tex_hi = spec.texture_extent;
  p.blend = Raster(spec.sensor_extent.r, spec.sensor_extent.c, 1.0);
  layout.patches.push_back(std::move(p));
  return layout;
}

PatchLayout PatchLayout::grid(const LatticeSpec& spec, Vec2i grid_dims, double overlap) {
  if (grid_dims.r < 1 || grid_dims.c < 1)
    throw ValidationError("PatchLayout::grid: grid dims must be >= 1");
  if (overlap < 0.0 || overlap >= 1.0)
    throw ValidationError("PatchLayout::grid: overlap must be in [0, 1)");
  if (grid_dims.r == 1 && grid_dims.c == 1) return single(spec);

  const Vec2i ext = spec.sensor_extent;
  auto spans = [&](int n, int g) {
    std::vector<std::pair<int, int>> s(g);
    const double len = n / ((g - 1) * (1.0 - overlap) + 1.0);
    const double stride = len * (1.0 - overlap);
    for (int i = 0; i < g; ++i) {
      int lo = static_cast<int>(std::lround(i * stride));
      int hi = static_cast<int>(std::lround(i * stride + len));
      if (i == 0) lo = 0;
      if (i == g - 1) hi = n;
      s[i] = {lo, std::min(hi, n)};
    }
    return s;
  };
  const auto row_spans = spans(ext.r, grid_dims.r);
  const auto col_spans = spans(ext.c, grid_dims.c);

  PatchLayout layout;
  for (int gr = 0; gr < grid_dims.r; ++gr)
    for (int gc = 0; gc < grid_dims.c; ++gc) {
      Patch p;
      p.lo = {row_spans[gr].first, col_spans[gc].first};
      p.hi = {row_spans[gr].second, col_spans[gc].second};
      const Vec2i jd = spec.pixels_per_block;
      const Vec2i td = spec.texture_units_per_block;
      p.tex_lo = {(p.lo.r / jd.r) * td.r, (p.lo.c / jd.c) * td.c};
      p.tex_hi = {((p.hi.r + jd.r - 1) / jd.r) * td.r, ((p.hi.c + jd.c - 1) / jd.c) * td.c};
      p.blend = Raster(ext.r, ext.c, 0.0);
      const int nr = p.hi.r - p.lo.r, nc = p.hi.c - p.lo.c;
      for (int r = p.lo.r; r < p.hi.r; ++r)
        for (int c = p.lo.c; c < p.hi.c; ++c)
          p.blend(r, c) = hann(r - p.lo.r, nr) * hann(c - p.lo.c, nc);
      for (int gr2 = 0; gr2 < grid_dims.r; ++gr2)
        for (int gc2 = 0; gc2 < grid_dims.c; ++gc2)
          if (std::abs(gr2 - gr) + std::abs(gc2 - gc) == 1)
            p.neighbors.push_back(gr2 * grid_dims.c + gc2);
      layout.patches.push_back(std::move(p));
    }

  Raster total(ext.r, ext.c, 0.0);
  for (const Patch& p : layout.patches) axpy(total, 1.0, p.blend);
  for (std::size_t i = 0; i < total.size(); ++i)
    if (total.data()[i] <= 0.0)
      throw ValidationError("PatchLayout::grid: sensor pixel not covered by any patch");
  for (Patch& p : layout.patches)
    for (std::size_t i = 0; i < total.size(); ++i) p.blend.data()[i] /= total.data()[i];
  return layout;
}

ModelOperators::ModelOperators(const PsfBank& bank, const CorrectionSet& corr, Boundary boundary)
    : bank_(&bank), boundary_(boundary) {
  const LatticeSpec& spec = bank.spec();
  corr.validate(spec);
  radial_identity_ = corr.radial_is_identity();
  warp_identity_ = is_identity_warp(corr.warp);
  if (!radial_identity_)
    radial_ = make_radial_resampler(spec.texture_extent, corr.radial_center, corr.kappa1,
                                    corr.kappa2, MapDirection::forward);
  if (!warp_identity_)
    warp_ = make_warp_resampler(spec.sensor_extent, corr.warp, MapDirection::forward);
  effective_mask_ = corr.mask;
  if (!warp_identity_) {
    const Raster& valid = warp_.validity();
    for (std::size_t i = 0; i < effective_mask_.size(); ++i)
      if (valid.data()[i] == 0.0) effective_mask_.data()[i] = 0.0;
  }
}

Raster ModelOperators::apply(const Raster& g) const {
  Raster x = radial_identity_ ? g : radial_.apply(g);
  Raster y = render_lf_raster(x, *bank_, boundary_);
  if (!warp_identity_) y = warp_.apply(y);
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= effective_mask_.data()[i];
  return y;
}

Raster ModelOperators::apply_adjoint(const Raster& r) const {
  Raster y = r;
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= effective_mask_.data()[i];
  if (!warp_identity_) y = warp_.apply_adjoint(y);
  Raster x = render_lf_adjoint_raster(y, *bank_, boundary_);
  if (!radial_identity_) x = radial_.apply_adjoint(x);
  return x;
}

LightFieldImage forward_full(const Texture& f, const std::vector<MotionKernel>& kernels,
                             const PsfBank& bank, const CorrectionSet& corrections,
                             const PatchLayout& patches, Boundary b) {
  check_texture(f);
  if (!(f.spec == bank.spec()))
    throw ValidationError("forward_full: texture lattice does not match the PSF bank");
  if (static_cast<int>(kernels.size()) != patches.count())
    throw ValidationError("forward_full: one motion kernel required per patch");
  const ModelOperators ops(bank, corrections, b);
  Raster out(f.spec.sensor_extent.r, f.spec.sensor_extent.c, 0.0);
  for (int i = 0; i < patches.count(); ++i) {
    const Texture g = motion_convolve(f, kernels[i], b);
    const Raster y = ops.apply(g.values);
    const Raster& blend = patches.patches[i].blend;
    for (std::size_t n = 0; n < out.size(); ++n) out.data()[n] += blend.data()[n] * y.data()[n];
  }
  return {std::move(out), f.spec};
}

}  // namespace lfdeblur
