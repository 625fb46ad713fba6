#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "lfdeblur/config.hpp"
#include "lfdeblur/errors.hpp"
#include "lfdeblur/harness.hpp"
#include "lfdeblur/image_io.hpp"
#include "oracles.hpp"

using namespace lfdeblur;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lfdeblur_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string desk_config_text(Vec2i blocks = {16, 16}, int iters = 40) {
  RunConfig rc;
  rc.camera = desk_suite().camera;
  rc.lattice = desk_suite().spec;
  rc.lattice.sensor_extent = {blocks.r * 4, blocks.c * 4};
  rc.lattice.texture_extent = {blocks.r * 2, blocks.c * 2};
  rc.deblur = desk_suite().deblur_clean;
  rc.deblur.iters_per_level = iters;
  rc.deblur.pyramid_levels = 2;
  rc.deblur.kernel_extent = {5, 5};
  return write_config(rc);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LFDEBLUR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("raw raster round-trips bit-exactly") {
  TempDir tmp;
  const Raster img = oracles::random_raster(17, 23, 1);
  const std::string path = tmp.file("img.raw");
  save_raster(path, img, "texture");
  std::string domain;
  const Raster back = load_raster(path, &domain);
  CHECK(domain == "texture");
  CHECK(back.rows() == 17);
  CHECK(back.cols() == 23);
  CHECK(max_abs_diff(img, back) == 0.0);
}

TEST_CASE("motion kernel files preserve the center") {
  TempDir tmp;
  const MotionKernel k = oracles::random_feasible_kernel({5, 7}, 2);
  const std::string path = tmp.file("k.raw");
  save_motion_kernel(path, k);
  const MotionKernel back = load_motion_kernel(path);
  CHECK(back.center == k.center);
  CHECK(max_abs_diff(back.weights, k.weights) == 0.0);
}

TEST_CASE("16-bit PNG round-trips to quantization accuracy") {
  TempDir tmp;
  const Raster img = oracles::random_raster(20, 30, 3);
  const std::string path = tmp.file("img.png");
  save_png16(path, img);
  const Raster back = load_png16(path);
  CHECK(back.same_extent(img));
  CHECK(max_abs_diff(img, back) <= 0.5 / 65535.0 + 1e-12);
}

TEST_CASE("mask PNG stays binary") {
  TempDir tmp;
  Raster mask(8, 8, 1.0);
  mask(3, 4) = 0.0;
  const std::string path = tmp.file("mask.png");
  save_mask_png(path, mask);
  const Raster back = load_mask_png(path);
  CHECK(max_abs_diff(mask, back) == 0.0);
}

TEST_CASE("config parsing covers sections, comments, and errors") {
  const ConfigFile cfg = ConfigFile::parse(
      "# top comment\n"
      "[camera]\n"
      "f_number = 2.049  # trailing comment\n"
      "scene_depth = 3\n"
      "\n"
      "[lattice]\n"
      "pixels_per_block = 16 16\n"
      "layout = hexagonal\n");
  CHECK(cfg.get_num("camera", "f_number") == doctest::Approx(2.049));
  CHECK(cfg.get_vec2i("lattice", "pixels_per_block") == Vec2i{16, 16});
  CHECK(cfg.get_str("lattice", "layout") == "hexagonal");
  CHECK(cfg.get_or("camera", "missing", 7.0) == 7.0);
  CHECK_THROWS_AS(cfg.get_num("camera", "absent"), ValidationError);
  CHECK_THROWS_AS(ConfigFile::parse("[bad\n"), ValidationError);
  CHECK_THROWS_AS(ConfigFile::parse("keyvalue\n"), ValidationError);
  CHECK(ConfigFile::parse("[camera]\nf_number = inf\n").get_num("camera", "f_number") ==
        doctest::Approx(std::numeric_limits<double>::infinity()));
}

TEST_CASE("run config round-trips through write_config") {
  const ConfigFile cfg = ConfigFile::parse(desk_config_text());
  const RunConfig rc = run_config_from(cfg);
  const RunConfig back = run_config_from(ConfigFile::parse(write_config(rc)));
  CHECK(back.camera.f_number == rc.camera.f_number);
  CHECK(back.lattice == rc.lattice);
  CHECK(back.deblur.lambda_alt == rc.deblur.lambda_alt);
  CHECK(back.deblur.kernel_extent == rc.deblur.kernel_extent);
}

TEST_CASE("cli: psf builds, caches, and validates") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("cfg.ini"));
    f << desk_config_text();
  }
  const std::string base = "--config " + tmp.file("cfg.ini") + " --out-dir " + tmp.path.string();
  CHECK(run_cli(base + " psf") == 0);
  CHECK(fs::exists(tmp.file("psf_bank.lfb")));
  CHECK(fs::exists(tmp.file("psf.manifest.json")));
  // cache hit: file mtime unchanged
  const auto t0 = fs::last_write_time(tmp.file("psf_bank.lfb"));
  CHECK(run_cli(base + " psf") == 0);
  CHECK(fs::last_write_time(tmp.file("psf_bank.lfb")) == t0);
}

TEST_CASE("cli: invalid configuration exits with code 1") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("bad.ini"));
    std::string text = desk_config_text();
    const auto pos = text.find("f_number = ");
    text.replace(pos, text.find('\n', pos) - pos, "f_number = 0");
    f << text;
  }
  CHECK(run_cli("--config " + tmp.file("bad.ini") + " --out-dir " + tmp.path.string() + " psf") ==
        1);
}

TEST_CASE("cli: render is deterministic bit-for-bit") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("cfg.ini"));
    f << desk_config_text();
  }
  const LatticeSpec spec = run_config_from(ConfigFile::parse(desk_config_text())).lattice;
  save_raster(tmp.file("tex.raw"),
              synth_texture("bricks", spec.texture_extent, 5), "texture");
  save_motion_kernel(tmp.file("k.raw"), synth_motion_kernel("line9", 1));
  const std::string base = "--config " + tmp.file("cfg.ini") + " --out-dir " + tmp.path.string();
  CHECK(run_cli(base + " render --texture " + tmp.file("tex.raw") + " --kernel " +
                tmp.file("k.raw") + " --out " + tmp.file("a.raw")) == 0);
  CHECK(run_cli(base + " render --texture " + tmp.file("tex.raw") + " --kernel " +
                tmp.file("k.raw") + " --out " + tmp.file("b.raw")) == 0);
  std::ifstream fa(tmp.file("a.raw"), std::ios::binary);
  std::ifstream fb(tmp.file("b.raw"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
}

TEST_CASE("cli: render shifts blocks with the texture (periodicity)") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("cfg.ini"));
    f << desk_config_text();
  }
  const RunConfig rc = run_config_from(ConfigFile::parse(desk_config_text()));
  const LatticeSpec spec = rc.lattice;
  const Raster tex = synth_texture("blobs", spec.texture_extent, 6);
  Raster shifted(tex.rows(), tex.cols(), 0.0);
  for (int r = 0; r < tex.rows(); ++r)
    for (int c = 2; c < tex.cols(); ++c) shifted(r, c) = tex(r, c - 2);
  save_raster(tmp.file("tex.raw"), tex, "texture");
  save_raster(tmp.file("texs.raw"), shifted, "texture");
  const std::string base = "--config " + tmp.file("cfg.ini") + " --out-dir " + tmp.path.string();
  CHECK(run_cli(base + " render --texture " + tmp.file("tex.raw") + " --out " +
                tmp.file("a.raw")) == 0);
  CHECK(run_cli(base + " render --texture " + tmp.file("texs.raw") + " --out " +
                tmp.file("b.raw")) == 0);
  const Raster a = load_raster(tmp.file("a.raw"));
  const Raster b = load_raster(tmp.file("b.raw"));
  double worst = 0.0;
  for (int r = 16; r < a.rows() - 16; ++r)
    for (int c = 16; c < a.cols() - 16; ++c)
      worst = std::max(worst, std::abs(b(r, c) - a(r, c - 4)));
  CHECK(worst < 1e-12);
}

TEST_CASE("cli: deblur emits texture, kernels, and trace") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("cfg.ini"));
    f << desk_config_text({12, 12}, 30);
  }
  const ConfigFile cf = ConfigFile::parse(desk_config_text({12, 12}, 30));
  const RunConfig rc = run_config_from(cf);
  const PsfBank bank = build_psf_bank(rc.camera, rc.lattice);
  const Texture gt =
      make_texture(synth_texture("bricks", rc.lattice.texture_extent, 8), rc.lattice);
  const LightFieldImage lm =
      forward_full(gt, {synth_motion_kernel("line9", 1)}, bank,
                   CorrectionSet::identity(rc.lattice), PatchLayout::single(rc.lattice));
  save_raster(tmp.file("lf.raw"), lm.values, "sensor");
  const std::string base = "--config " + tmp.file("cfg.ini") + " --out-dir " + tmp.path.string();
  CHECK(run_cli(base + " deblur --input " + tmp.file("lf.raw")) == 0);
  CHECK(fs::exists(tmp.file("texture.raw")));
  CHECK(fs::exists(tmp.file("texture.png")));
  CHECK(fs::exists(tmp.file("kernel_0.raw")));
  CHECK(fs::exists(tmp.file("kernel_0.png")));
  CHECK(fs::exists(tmp.file("trace.csv")));
  CHECK(fs::exists(tmp.file("deblur.manifest.json")));
}

TEST_CASE("cli: mask command writes a binary mask") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("cfg.ini"));
    f << desk_config_text();
  }
  const RunConfig rc = run_config_from(ConfigFile::parse(desk_config_text()));
  Raster white(rc.lattice.sensor_extent.r, rc.lattice.sensor_extent.c, 1.0);
  white(10, 10) = 0.0;
  save_raster(tmp.file("white.raw"), white, "sensor");
  const std::string base = "--config " + tmp.file("cfg.ini") + " --out-dir " + tmp.path.string();
  CHECK(run_cli(base + " mask --white " + tmp.file("white.raw")) == 0);
  const Raster mask = load_mask_png(tmp.file("mask.png"));
  CHECK(mask(10, 10) == 0.0);
  CHECK(mask(1, 1) == 1.0);  // interior, off the block border ring
}
