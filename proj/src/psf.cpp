#include "lfdeblur/psf.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>

#include "lfdeblur/errors.hpp"
#include "lfdeblur/parallel.hpp"

namespace lfdeblur {

namespace {

constexpr double kPi = 3.14159265358979323846;

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int floor_to_int(double x) { return static_cast<int>(std::floor(x)); }

/// Area of the intersection of two discs.
double lens_area(double d, double r1, double r2) {
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) {
    const double r = std::min(r1, r2);
    return kPi * r * r;
  }
  const double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2 * d * r1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2 * d * r2), -1.0, 1.0));
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(0.0, k));
}

}  // namespace

MotionKernel MotionKernel::delta(Vec2i extent) {
  MotionKernel k;
  k.weights = Raster(extent.r, extent.c, 0.0);
  k.center = {extent.r / 2, extent.c / 2};
  k.weights(k.center.r, k.center.c) = 1.0;
  return k;
}

MotionKernel project_kernel(const MotionKernel& k) {
  MotionKernel out = k;
  bool any_negative = false;
  long double s = 0.0L;
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    double& w = out.weights.data()[i];
    if (!std::isfinite(w)) throw NumericalError("project_kernel: non-finite weight");
    if (w < 0.0) {
      w = 0.0;
      any_negative = true;
    }
    s += w;
  }
  if (s <= 0.0L)
    throw DegenerateKernelError("project_kernel: kernel has no positive mass");
  // Already-feasible kernels are returned untouched so projection is a fixed
  // point in the exact bitwise sense.
  if (!any_negative && std::abs(static_cast<double>(s) - 1.0) <= 1e-13) return out;
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    out.weights.data()[i] = static_cast<double>(out.weights.data()[i] / s);
    if (out.weights.data()[i] > out.weights.data()[argmax]) argmax = i;
  }
  long double s2 = 0.0L;
  for (std::size_t i = 0; i < out.weights.size(); ++i) s2 += out.weights.data()[i];
  out.weights.data()[argmax] += static_cast<double>(1.0L - s2);
  return out;
}

bool kernel_feasible(const MotionKernel& k, double sum_tol) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < k.weights.size(); ++i) {
    if (k.weights.data()[i] < 0.0) return false;
    s += k.weights.data()[i];
  }
  return std::abs(static_cast<double>(s) - 1.0) < sum_tol;
}

PhysicalLayout physical_layout(const CameraConfig& cam, const LatticeSpec& spec) {
  PhysicalLayout g;
  const double s = cam.microlens_spacing;
  g.block_size = spec.layout == Layout::hexagonal ? Vec2d{s * std::sqrt(3.0), s} : Vec2d{s, s};
  g.pixel_pitch = {g.block_size.r / spec.pixels_per_block.r,
                   g.block_size.c / spec.pixels_per_block.c};
  g.texel_pitch = {g.block_size.r / spec.texture_units_per_block.r,
                   g.block_size.c / spec.texture_units_per_block.c};
  g.aperture_radius = s / 2.0;
  return g;
}

PsfOptics derive_optics(const CameraConfig& cam) {
  PsfOptics o;
  o.pinhole = std::isinf(cam.f_number);
  const double f = cam.main_lens_focal_length;
  const double z = cam.scene_depth;
  if (z <= f)
    throw ValidationError("derive_optics: scene depth must exceed the main lens focal length");
  o.main_image_dist = 1.0 / (1.0 / f - 1.0 / z);
  o.object_dist = cam.lens_to_mla_distance - o.main_image_dist;
  if (std::abs(o.object_dist) < 1e-9 * cam.lens_to_mla_distance)
    throw ValidationError(
        "derive_optics: main lens image falls exactly on the microlens plane; "
        "the disc model is degenerate at this depth");
  o.inv_image_dist = 1.0 / cam.microlens_focal_length - 1.0 / o.object_dist;
  o.spread_scale = 1.0 - cam.mla_to_sensor_distance * o.inv_image_dist;
  o.chief_ray_mag = o.main_image_dist / cam.lens_to_mla_distance;
  const double aperture = o.pinhole ? 0.0 : f / cam.f_number;
  o.main_disc_radius =
      0.5 * aperture * std::abs(o.object_dist) / o.main_image_dist;
  return o;
}

PsfBank::PsfBank(LatticeSpec spec, CameraConfig camera, int support_radius)
    : spec_(std::move(spec)), camera_(camera), support_radius_(support_radius) {
  const int side = kernel_side();
  kernels_.assign(static_cast<std::size_t>(view_count()) * phase_count(),
                  Raster(side, side, 0.0));
}

int PsfBank::kernel_index(Vec2i j, Vec2i t) const {
  const Vec2i jd = spec_.pixels_per_block;
  const Vec2i td = spec_.texture_units_per_block;
  return (j.r * jd.c + j.c) * (td.r * td.c) + (t.r * td.c + t.c);
}

Raster& PsfBank::kernel(Vec2i j, Vec2i t) { return kernels_[kernel_index(j, t)]; }
const Raster& PsfBank::kernel(Vec2i j, Vec2i t) const { return kernels_[kernel_index(j, t)]; }

const std::vector<PsfBank::Tap>& PsfBank::taps(Vec2i j, Vec2i t) const {
  return taps_[kernel_index(j, t)];
}

double PsfBank::flux(Vec2i t) const {
  long double s = 0.0L;
  const Vec2i jd = spec_.pixels_per_block;
  for (int jr = 0; jr < jd.r; ++jr)
    for (int jc = 0; jc < jd.c; ++jc) {
      const Raster& k = kernel({jr, jc}, t);
      for (std::size_t i = 0; i < k.size(); ++i) s += k.data()[i];
    }
  return static_cast<double>(s);
}

void PsfBank::rebuild_taps() {
  taps_.assign(kernels_.size(), {});
  const int r = support_radius_;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    const Raster& k = kernels_[i];
    for (int kr = 0; kr < k.rows(); ++kr)
      for (int kc = 0; kc < k.cols(); ++kc)
        if (k(kr, kc) != 0.0) taps_[i].push_back({kr - r, kc - r, k(kr, kc)});
  }
}

namespace {

/// Geometry of one microlens' contribution to one texture sample: the
/// illuminated part of the aperture re-imaged onto the sensor, i.e. the
/// intersection of two sensor-plane discs.
struct LensFootprint {
  Vec2d c1;   // image of the main-lens blur disc centre
  Vec2d c2;   // image of the aperture centre
  double r1;  // |s| * main disc radius
  double r2;  // |s| * aperture radius
  double flux;  // fraction of the sample's total flux through this lens
};

struct BuilderContext {
  const LatticeSpec* spec;
  PhysicalLayout geo;
  PsfOptics optics;
  double d2;
  double density;  // sensor irradiance per unit flux, constant across lenses
};

Vec2d texel_position(const BuilderContext& ctx, Vec2i t) {
  return {(t.r + 0.5) * ctx.geo.texel_pitch.r, (t.c + 0.5) * ctx.geo.texel_pitch.c};
}

/// Maps an aperture-plane point through microlens `c` onto the sensor.
Vec2d sensor_map(const BuilderContext& ctx, Vec2d a, Vec2d c, Vec2d p_lat) {
  const PsfOptics& o = ctx.optics;
  const double s = o.spread_scale;
  const double dk = ctx.d2 * o.inv_image_dist;
  const double dof = ctx.d2 / o.object_dist;
  return {s * a.r + dk * c.r - dof * (p_lat.r - c.r),
          s * a.c + dk * c.c - dof * (p_lat.c - c.c)};
}

template <typename Fn>
void for_each_lens(const BuilderContext& ctx, Vec2d pos, double reach, Fn&& fn) {
  const Vec2d bs = ctx.geo.block_size;
  const int br0 = floor_to_int((pos.r - reach) / bs.r) - 1;
  const int br1 = floor_to_int((pos.r + reach) / bs.r) + 1;
  const int bc0 = floor_to_int((pos.c - reach) / bs.c) - 1;
  const int bc1 = floor_to_int((pos.c + reach) / bs.c) + 1;
  for (int br = br0; br <= br1; ++br)
    for (int bc = bc0; bc <= bc1; ++bc)
      for (int which = 0; which < ctx.spec->lenses_per_block(); ++which) {
        const Vec2d rel = ctx.spec->lens_center(which);
        fn(Vec2d{(br + rel.r) * bs.r, (bc + rel.c) * bs.c});
      }
}

/// Nearest microlens centre; the Voronoi owner of an MLA-plane point.
Vec2d nearest_lens(const BuilderContext& ctx, Vec2d pos) {
  Vec2d best{0, 0};
  double best_d = std::numeric_limits<double>::infinity();
  for_each_lens(ctx, pos, ctx.geo.aperture_radius, [&](Vec2d c) {
    const double d = std::hypot(c.r - pos.r, c.c - pos.c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  });
  return best;
}

std::vector<LensFootprint> footprints_for(const BuilderContext& ctx, Vec2i t) {
  const Vec2d pos = texel_position(ctx, t);
  const PsfOptics& o = ctx.optics;
  const Vec2d p_lat{pos.r * o.chief_ray_mag, pos.c * o.chief_ray_mag};
  const double r_ap = ctx.geo.aperture_radius;
  const double s_abs = std::abs(o.spread_scale);

  std::vector<LensFootprint> out;
  if (o.pinhole || o.main_disc_radius == 0.0) {
    // Closed aperture: the single chief ray passes through the Voronoi
    // microlens and lands on exactly one pixel.
    const Vec2d c = nearest_lens(ctx, pos);
    LensFootprint fp;
    fp.c1 = fp.c2 = sensor_map(ctx, pos, c, p_lat);
    fp.r1 = fp.r2 = 0.0;
    fp.flux = 1.0;
    out.push_back(fp);
    return out;
  }

  const double r_main = o.main_disc_radius;
  const double gross = kPi * r_main * r_main;
  for_each_lens(ctx, pos, r_main + r_ap, [&](Vec2d c) {
    const double d = std::hypot(c.r - pos.r, c.c - pos.c);
    if (d >= r_main + r_ap) return;
    const double area = lens_area(d, r_main, r_ap);
    if (area <= 0.0) return;
    LensFootprint fp;
    fp.c1 = sensor_map(ctx, pos, c, p_lat);
    fp.c2 = sensor_map(ctx, c, c, p_lat);
    fp.r1 = s_abs * r_main;
    fp.r2 = s_abs * r_ap;
    fp.flux = area / gross;
    out.push_back(fp);
  });
  return out;
}

struct BlockBounds {
  int lo_r = 0, hi_r = 0, lo_c = 0, hi_c = 0;
  bool any = false;

  void include(int br, int bc) {
    if (!any) {
      lo_r = hi_r = br;
      lo_c = hi_c = bc;
      any = true;
    } else {
      lo_r = std::min(lo_r, br);
      hi_r = std::max(hi_r, br);
      lo_c = std::min(lo_c, bc);
      hi_c = std::max(hi_c, bc);
    }
  }
  int radius() const {
    return any ? std::max({std::abs(lo_r), hi_r, std::abs(lo_c), hi_c}) : 0;
  }
};

Vec2i pixel_of(const BuilderContext& ctx, Vec2d xi) {
  return {floor_to_int(xi.r / ctx.geo.pixel_pitch.r), floor_to_int(xi.c / ctx.geo.pixel_pitch.c)};
}

/// Rasterizes one footprint into the bank slice for texture offset t.
/// Midpoint quadrature across sub-columns in x, exact chord extents in y.
void splat_footprint(const BuilderContext& ctx, const LensFootprint& fp, Vec2i t,
                     int supersample, PsfBank* bank) {
  const LatticeSpec& spec = *ctx.spec;
  const Vec2d pitch = ctx.geo.pixel_pitch;
  const int rsup = bank->support_radius();
  const Vec2i jdim = spec.pixels_per_block;

  auto deposit = [&](Vec2i px, double w) {
    const int kr = floor_div(px.r, jdim.r);
    const int kc = floor_div(px.c, jdim.c);
    const Vec2i j{px.r - kr * jdim.r, px.c - kc * jdim.c};
    bank->kernel(j, t)(kr + rsup, kc + rsup) += w;
  };

  const double tiny = 1e-7 * std::min(pitch.r, pitch.c);
  if (fp.r1 + fp.r2 < tiny) {
    deposit(pixel_of(ctx, fp.c1), fp.flux);
    return;
  }

  const double x0 = std::max(fp.c1.c - fp.r1, fp.c2.c - fp.r2);
  const double x1 = std::min(fp.c1.c + fp.r1, fp.c2.c + fp.r2);
  if (x1 <= x0) return;

  const int pc0 = floor_to_int(x0 / pitch.c);
  const int pc1 = floor_to_int(x1 / pitch.c);
  for (int pc = pc0; pc <= pc1; ++pc) {
    const double cx0 = std::max(x0, pc * pitch.c);
    const double cx1 = std::min(x1, (pc + 1) * pitch.c);
    if (cx1 <= cx0) continue;
    const double sub_w = (cx1 - cx0) / supersample;
    for (int i = 0; i < supersample; ++i) {
      const double xc = cx0 + (i + 0.5) * sub_w;
      const double q1 = fp.r1 * fp.r1 - (xc - fp.c1.c) * (xc - fp.c1.c);
      const double q2 = fp.r2 * fp.r2 - (xc - fp.c2.c) * (xc - fp.c2.c);
      if (q1 <= 0.0 || q2 <= 0.0) continue;
      const double dy1 = std::sqrt(q1);
      const double dy2 = std::sqrt(q2);
      const double ylo = std::max(fp.c1.r - dy1, fp.c2.r - dy2);
      const double yhi = std::min(fp.c1.r + dy1, fp.c2.r + dy2);
      if (yhi <= ylo) continue;
      const int pr0 = floor_to_int(ylo / pitch.r);
      const int pr1 = floor_to_int(yhi / pitch.r);
      for (int pr = pr0; pr <= pr1; ++pr) {
        const double seg =
            std::min(yhi, (pr + 1) * pitch.r) - std::max(ylo, pr * pitch.r);
        if (seg <= 0.0) continue;
        // Irradiance over the re-imaged region is uniform and shared by all
        // lenses; the per-lens flux fraction is already encoded in its area.
        deposit({pr, pc}, seg * sub_w * ctx.density);
      }
    }
  }
}

}  // namespace

PsfBank build_psf_bank(const CameraConfig& cam, const LatticeSpec& spec,
                       const PsfBuildOptions& opts) {
  cam.validate();
  spec.validate();
  if (opts.supersample < 1) throw ValidationError("build_psf_bank: supersample must be >= 1");

  BuilderContext ctx;
  ctx.spec = &spec;
  ctx.geo = physical_layout(cam, spec);
  ctx.optics = derive_optics(cam);
  ctx.d2 = cam.mla_to_sensor_distance;
  {
    const double s = ctx.optics.spread_scale;
    const double r = ctx.optics.main_disc_radius;
    ctx.density = (r > 0.0 && s != 0.0) ? 1.0 / (kPi * r * r * s * s) : 1.0;
  }

  const Vec2i tdim = spec.texture_units_per_block;
  std::vector<std::vector<LensFootprint>> footprints(tdim.r * tdim.c);
  BlockBounds bounds;
  for (int tr = 0; tr < tdim.r; ++tr)
    for (int tc = 0; tc < tdim.c; ++tc) {
      auto& fps = footprints[tr * tdim.c + tc];
      fps = footprints_for(ctx, {tr, tc});
      for (const LensFootprint& fp : fps) {
        const Vec2i lo = pixel_of(ctx, {fp.c1.r - fp.r1, fp.c1.c - fp.r1});
        const Vec2i hi = pixel_of(ctx, {fp.c1.r + fp.r1, fp.c1.c + fp.r1});
        const Vec2i lo2 = pixel_of(ctx, {fp.c2.r - fp.r2, fp.c2.c - fp.r2});
        const Vec2i hi2 = pixel_of(ctx, {fp.c2.r + fp.r2, fp.c2.c + fp.r2});
        const Vec2i jdim = spec.pixels_per_block;
        bounds.include(floor_div(std::max(lo.r, lo2.r), jdim.r),
                       floor_div(std::max(lo.c, lo2.c), jdim.c));
        bounds.include(floor_div(std::min(hi.r, hi2.r), jdim.r),
                       floor_div(std::min(hi.c, hi2.c), jdim.c));
      }
    }

  const int required = bounds.radius();
  if (required > opts.max_support_radius) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "build_psf_bank: PSF footprint needs support radius %d blocks "
                  "(cap %d); blur discs too large for this configuration",
                  required, opts.max_support_radius);
    throw SupportOverflowError(msg, required);
  }

  PsfBank bank(spec, cam, required);
  parallel_for(tdim.r * tdim.c, [&](int ti) {
    const Vec2i t{ti / tdim.c, ti % tdim.c};
    for (const LensFootprint& fp : footprints[ti])
      splat_footprint(ctx, fp, t, opts.supersample, &bank);
  });
  const Vec2i jdim = spec.pixels_per_block;
  for (int tr = 0; tr < tdim.r; ++tr)
    for (int tc = 0; tc < tdim.c; ++tc) {
      const Vec2i t{tr, tc};
      const double total = bank.flux(t);
      if (total <= 0.0)
        throw ValidationError(
            "build_psf_bank: texture sample receives no flux (sample falls in "
            "an aperture gap); adjust texture resolution or aperture");
      for (int jr = 0; jr < jdim.r; ++jr)
        for (int jc = 0; jc < jdim.c; ++jc) {
          Raster& k = bank.kernel({jr, jc}, t);
          for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] /= total;
        }
    }
  bank.rebuild_taps();
  return bank;
}

double eval_psf(const PsfBank& bank, Vec2i x, Vec2i p) {
  const BlockIndex xs = decompose(x, bank.spec(), Domain::sensor);
  const BlockIndex ps = decompose(p, bank.spec(), Domain::texture);
  const Vec2i rel = xs.block - ps.block;
  const int r = bank.support_radius();
  if (rel.r < -r || rel.r > r || rel.c < -r || rel.c > r) return 0.0;
  return bank.kernel(xs.offset, ps.offset)(rel.r + r, rel.c + r);
}

namespace {

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  std::fwrite(b, 1, 4, f);
}

void put_u64(std::FILE* f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  std::fwrite(b, 1, 8, f);
}

void put_f64(std::FILE* f, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  put_u64(f, v);
}

std::uint32_t get_u32(std::FILE* f) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw ValidationError("psf bank: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::FILE* f) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8) throw ValidationError("psf bank: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::FILE* f) {
  const std::uint64_t v = get_u64(f);
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

constexpr std::uint32_t kBankMagic = 0x42504C46u;  // "FLPB" little-endian

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void save_psf_bank(const PsfBank& bank, const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ValidationError("save_psf_bank: cannot open " + path);
  const LatticeSpec& spec = bank.spec();
  put_u32(f.get(), kBankMagic);
  put_u32(f.get(), 1);  // version
  put_u32(f.get(), static_cast<std::uint32_t>(spec.layout));
  put_u32(f.get(), spec.pixels_per_block.r);
  put_u32(f.get(), spec.pixels_per_block.c);
  put_u32(f.get(), spec.texture_units_per_block.r);
  put_u32(f.get(), spec.texture_units_per_block.c);
  put_u32(f.get(), spec.sensor_extent.r);
  put_u32(f.get(), spec.sensor_extent.c);
  put_u32(f.get(), spec.texture_extent.r);
  put_u32(f.get(), spec.texture_extent.c);
  put_u32(f.get(), bank.support_radius());
  put_u64(f.get(), bank.cache_key());
  const CameraConfig& cam = bank.camera();
  put_f64(f.get(), cam.main_lens_focal_length);
  put_f64(f.get(), cam.f_number);
  put_f64(f.get(), cam.pixel_size);
  put_f64(f.get(), cam.microlens_spacing);
  put_f64(f.get(), cam.lens_to_mla_distance);
  put_f64(f.get(), cam.mla_to_sensor_distance);
  put_f64(f.get(), cam.microlens_focal_length);
  put_f64(f.get(), cam.scene_depth);
  const Vec2i jdim = spec.pixels_per_block;
  const Vec2i tdim = spec.texture_units_per_block;
  for (int jr = 0; jr < jdim.r; ++jr)
    for (int jc = 0; jc < jdim.c; ++jc)
      for (int tr = 0; tr < tdim.r; ++tr)
        for (int tc = 0; tc < tdim.c; ++tc) {
          const Raster& k = bank.kernel({jr, jc}, {tr, tc});
          for (int r = 0; r < k.rows(); ++r)
            for (int c = 0; c < k.cols(); ++c) put_f64(f.get(), k(r, c));
        }
  if (std::ferror(f.get())) throw ValidationError("save_psf_bank: write failed for " + path);
}

PsfBank load_psf_bank(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ValidationError("load_psf_bank: cannot open " + path);
  if (get_u32(f.get()) != kBankMagic) throw ValidationError("load_psf_bank: bad magic in " + path);
  if (get_u32(f.get()) != 1) throw ValidationError("load_psf_bank: unsupported version");
  LatticeSpec spec;
  spec.layout = static_cast<Layout>(get_u32(f.get()));
  spec.pixels_per_block = {static_cast<int>(get_u32(f.get())), static_cast<int>(get_u32(f.get()))};
  spec.texture_units_per_block = {static_cast<int>(get_u32(f.get())),
                                  static_cast<int>(get_u32(f.get()))};
  spec.sensor_extent = {static_cast<int>(get_u32(f.get())), static_cast<int>(get_u32(f.get()))};
  spec.texture_extent = {static_cast<int>(get_u32(f.get())), static_cast<int>(get_u32(f.get()))};
  const int support = static_cast<int>(get_u32(f.get()));
  const std::uint64_t stored_hash = get_u64(f.get());
  CameraConfig cam;
  cam.main_lens_focal_length = get_f64(f.get());
  cam.f_number = get_f64(f.get());
  cam.pixel_size = get_f64(f.get());
  cam.microlens_spacing = get_f64(f.get());
  cam.lens_to_mla_distance = get_f64(f.get());
  cam.mla_to_sensor_distance = get_f64(f.get());
  cam.microlens_focal_length = get_f64(f.get());
  cam.scene_depth = get_f64(f.get());
  spec.validate();
  if (stored_hash != camera_hash(cam, spec))
    throw ValidationError("load_psf_bank: header hash does not match parameters in " + path);
  PsfBank bank(spec, cam, support);
  const Vec2i jdim = spec.pixels_per_block;
  const Vec2i tdim = spec.texture_units_per_block;
  for (int jr = 0; jr < jdim.r; ++jr)
    for (int jc = 0; jc < jdim.c; ++jc)
      for (int tr = 0; tr < tdim.r; ++tr)
        for (int tc = 0; tc < tdim.c; ++tc) {
          Raster& k = bank.kernel({jr, jc}, {tr, tc});
          for (int r = 0; r < k.rows(); ++r)
            for (int c = 0; c < k.cols(); ++c) k(r, c) = get_f64(f.get());
        }
  bank.rebuild_taps();
  return bank;
}

}  // namespace lfdeblur
