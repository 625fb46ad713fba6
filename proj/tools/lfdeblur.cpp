// Command-line front end: psf / render / deblur / bench / mask subcommands
// over one sectioned configuration file. Every run writes a manifest with
// content hashes beside its outputs for reproducibility.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lfdeblur/config.hpp"
#include "lfdeblur/deblur.hpp"
#include "lfdeblur/errors.hpp"
#include "lfdeblur/harness.hpp"
#include "lfdeblur/image_io.hpp"
#include "lfdeblur/parallel.hpp"
#include "lfdeblur/psf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lfdeblur;

namespace {

struct GlobalOpts {
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 1234;
  int threads = 0;
  bool force = false;
};

std::uint64_t hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot hash missing file " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_manifest(const GlobalOpts& g, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, std::uint64_t bank_key = 0) {
  json m;
  m["command"] = command;
  m["config"] = g.config;
  m["seed"] = g.seed;
  if (bank_key) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bank_key));
    m["bank_key"] = buf;
  }
  for (const std::string& p : inputs) m["inputs"][p] = hash_file(p);
  for (const std::string& p : outputs) m["outputs"][p] = hash_file(p);
  const fs::path path = fs::path(g.out_dir) / (command + ".manifest.json");
  std::ofstream f(path);
  f << m.dump(2) << "\n";
}

RunConfig load_config(const GlobalOpts& g) {
  if (g.config.empty()) throw ValidationError("--config is required");
  return run_config_from(ConfigFile::load(g.config));
}

PatchLayout patches_from(const RunConfig& rc) {
  if (rc.patch_grid.r == 1 && rc.patch_grid.c == 1) return PatchLayout::single(rc.lattice);
  return PatchLayout::grid(rc.lattice, rc.patch_grid);
}

std::string default_bank_path(const GlobalOpts& g) {
  return (fs::path(g.out_dir) / "psf_bank.lfb").string();
}

PsfBank obtain_bank(const GlobalOpts& g, const RunConfig& rc, const std::string& bank_path,
                    bool* cache_hit = nullptr) {
  const std::uint64_t want = camera_hash(rc.camera, rc.lattice);
  if (!g.force && fs::exists(bank_path)) {
    PsfBank bank = load_psf_bank(bank_path);
    if (bank.cache_key() == want) {
      if (cache_hit) *cache_hit = true;
      return bank;
    }
  }
  if (cache_hit) *cache_hit = false;
  PsfBank bank = build_psf_bank(rc.camera, rc.lattice);
  save_psf_bank(bank, bank_path);
  return bank;
}

int cmd_psf(const GlobalOpts& g, const std::string& out) {
  const RunConfig rc = load_config(g);
  const std::string path = out.empty() ? default_bank_path(g) : out;
  bool hit = false;
  const PsfBank bank = obtain_bank(g, rc, path, &hit);
  std::printf("%s bank %s: layout=%s pixels_per_block=%dx%d texture_units=%dx%d support=%d\n",
              hit ? "cached" : "built", path.c_str(), layout_name(bank.spec().layout).c_str(),
              bank.spec().pixels_per_block.r, bank.spec().pixels_per_block.c,
              bank.spec().texture_units_per_block.r, bank.spec().texture_units_per_block.c,
              bank.support_radius());
  write_manifest(g, "psf", {g.config}, {path}, bank.cache_key());
  return 0;
}

int cmd_render(const GlobalOpts& g, const std::string& texture_path,
               const std::string& kernel_path, const std::string& bank_path,
               const std::string& out) {
  const RunConfig rc = load_config(g);
  const std::string bpath = bank_path.empty() ? default_bank_path(g) : bank_path;
  const PsfBank bank = obtain_bank(g, rc, bpath);
  const Texture f = make_texture(load_image(texture_path), rc.lattice);
  const MotionKernel k =
      kernel_path.empty() ? MotionKernel::delta(rc.deblur.kernel_extent)
                          : load_motion_kernel(kernel_path);
  const CorrectionSet corr = corrections_from(rc);
  const PatchLayout patches = patches_from(rc);
  const std::vector<MotionKernel> kernels(patches.count(), k);
  const LightFieldImage lf = forward_full(f, kernels, bank, corr, patches);
  const std::string path = out.empty() ? (fs::path(g.out_dir) / "render.raw").string() : out;
  save_image(path, lf.values, "sensor");
  std::printf("rendered %s (%dx%d)\n", path.c_str(), lf.values.rows(), lf.values.cols());
  std::vector<std::string> inputs{g.config, texture_path};
  if (!kernel_path.empty()) inputs.push_back(kernel_path);
  write_manifest(g, "render", inputs, {path}, bank.cache_key());
  return 0;
}

int cmd_deblur(const GlobalOpts& g, const std::string& input_path,
               const std::string& bank_path) {
  const RunConfig rc = load_config(g);
  const std::string bpath = bank_path.empty() ? default_bank_path(g) : bank_path;
  const PsfBank bank = obtain_bank(g, rc, bpath);
  const CorrectionSet corr = corrections_from(rc);
  const PatchLayout patches = patches_from(rc);

  LightFieldImage obs = make_lf_image(load_image(input_path), rc.lattice);
  if (!rc.white_path.empty())
    obs = normalize_white(obs, make_lf_image(corr.white, rc.lattice), corr.mask);

  const DeblurResult res = blind_deconvolve(obs, bank, corr, patches, rc.deblur);

  std::vector<std::string> outputs;
  const fs::path dir(g.out_dir);
  const std::string tex_raw = (dir / "texture.raw").string();
  const std::string tex_png = (dir / "texture.png").string();
  save_raster(tex_raw, res.texture.values, "texture");
  save_png16(tex_png, res.texture.values);
  outputs.push_back(tex_raw);
  outputs.push_back(tex_png);
  for (std::size_t i = 0; i < res.kernels.size(); ++i) {
    const std::string kpath = (dir / ("kernel_" + std::to_string(i) + ".raw")).string();
    save_motion_kernel(kpath, res.kernels[i]);
    outputs.push_back(kpath);
    Raster vis = res.kernels[i].weights;
    const double peak = max_value(vis);
    if (peak > 0)
      for (std::size_t n = 0; n < vis.size(); ++n) vis.data()[n] /= peak;
    const std::string kpng = (dir / ("kernel_" + std::to_string(i) + ".png")).string();
    save_png16(kpng, vis);
    outputs.push_back(kpng);
  }
  const std::string trace_path = (dir / "trace.csv").string();
  {
    std::ofstream tf(trace_path);
    tf << "iteration,data_term\n";
    tf.precision(12);
    for (std::size_t i = 0; i < res.energy_trace.size(); ++i)
      tf << i << "," << res.energy_trace[i] << "\n";
  }
  outputs.push_back(trace_path);
  std::printf("deblurred %s: %zu kernels, %zu trace entries, %d projection resets\n",
              input_path.c_str(), res.kernels.size(), res.energy_trace.size(),
              res.projection_resets);
  write_manifest(g, "deblur", {g.config, input_path}, outputs, bank.cache_key());
  return 0;
}

int cmd_bench(const GlobalOpts& g, int iters_override) {
  SuiteConfig suite = desk_suite();
  if (!g.config.empty()) {
    const ConfigFile cf = ConfigFile::load(g.config);
    const RunConfig rc = run_config_from(cf);
    if (cf.has_section("camera")) suite.camera = rc.camera;
    if (cf.has_section("lattice")) {
      suite.spec = rc.lattice;
      suite.textures.clear();
      std::uint64_t s = 11;
      for (const std::string& kind : rc.bench.textures)
        suite.textures.emplace_back(kind, synth_texture(kind, rc.lattice.texture_extent, s += 11));
      suite.kernels.clear();
      s = 1;
      for (const std::string& kind : rc.bench.kernels)
        suite.kernels.emplace_back(kind, synth_motion_kernel(kind, s++));
    }
    if (cf.has_section("deblur")) {
      suite.deblur_clean = rc.deblur;
      suite.deblur_noisy = rc.deblur;
    }
    suite.noise_levels = rc.bench.noise_levels;
    suite.seed = rc.bench.seed;
    suite.max_shift = rc.bench.max_shift;
  }
  suite.seed = g.seed != 1234 ? g.seed : suite.seed;
  if (iters_override > 0) {
    suite.deblur_clean.iters_per_level = iters_override;
    suite.deblur_noisy.iters_per_level = iters_override;
  }

  const ExperimentReport report = run_suite(suite);
  const fs::path dir(g.out_dir);
  const std::string csv_path = (dir / "report.csv").string();
  const std::string txt_path = (dir / "report.txt").string();
  {
    std::ofstream f(csv_path);
    f << report.to_csv();
  }
  {
    std::ofstream f(txt_path);
    f << report.to_table();
  }
  std::printf("%s", report.to_table().c_str());
  int failures = 0;
  for (const CaseResult& r : report.rows)
    if (!r.ok) ++failures;
  if (failures) std::fprintf(stderr, "bench: %d case runs failed (see %s)\n", failures,
                             csv_path.c_str());
  std::vector<std::string> inputs;
  if (!g.config.empty()) inputs.push_back(g.config);
  write_manifest(g, "bench", inputs, {csv_path, txt_path});
  return 0;
}

int cmd_mask(const GlobalOpts& g, const std::string& white_path, const std::string& dark_path,
             double threshold, const std::string& out) {
  const RunConfig rc = load_config(g);
  const LightFieldImage white = make_lf_image(load_image(white_path), rc.lattice);
  LightFieldImage dark{Raster(rc.lattice.sensor_extent.r, rc.lattice.sensor_extent.c, 0.0),
                       rc.lattice};
  if (!dark_path.empty()) dark = make_lf_image(load_image(dark_path), rc.lattice);
  const Raster mask = build_mask(white, dark, threshold);
  const std::string path = out.empty() ? (fs::path(g.out_dir) / "mask.png").string() : out;
  save_mask_png(path, mask);
  std::printf("mask %s: %d of %zu pixels kept\n", path.c_str(),
              static_cast<int>(sum(mask)), mask.size());
  std::vector<std::string> inputs{g.config, white_path};
  if (!dark_path.empty()) inputs.push_back(dark_path);
  write_manifest(g, "mask", inputs, {path});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motion deblurring for microlens-array light field images"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config, "configuration file");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_flag("--force", g.force, "rebuild cached artifacts");

  std::string psf_out;
  CLI::App* psf = app.add_subcommand("psf", "build and cache the PSF bank");
  psf->add_option("--out", psf_out, "bank file path");

  std::string r_texture, r_kernel, r_bank, r_out;
  CLI::App* render = app.add_subcommand("render", "render a motion-blurred light field");
  render->add_option("--texture", r_texture, "input texture raster")->required();
  render->add_option("--kernel", r_kernel, "motion kernel file (default: delta)");
  render->add_option("--bank", r_bank, "PSF bank file");
  render->add_option("--out", r_out, "output image path");

  std::string d_input, d_bank;
  CLI::App* deblur = app.add_subcommand("deblur", "blind deconvolution of a light field image");
  deblur->add_option("--input", d_input, "observed light field image")->required();
  deblur->add_option("--bank", d_bank, "PSF bank file");

  int b_iters = 0;
  CLI::App* bench = app.add_subcommand("bench", "run the synthetic benchmark suite");
  bench->add_option("--iters", b_iters, "override iterations per level");

  std::string m_white, m_dark, m_out;
  double m_threshold = 0.2;
  CLI::App* mask = app.add_subcommand("mask", "build a vignetting mask from calibration images");
  mask->add_option("--white", m_white, "white calibration image")->required();
  mask->add_option("--dark", m_dark, "dark calibration image");
  mask->add_option("--threshold", m_threshold, "white threshold fraction");
  mask->add_option("--out", m_out, "output mask path");

  CLI11_PARSE(app, argc, argv);

  try {
    set_worker_count(g.threads);
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    if (psf->parsed()) return cmd_psf(g, psf_out);
    if (render->parsed()) return cmd_render(g, r_texture, r_kernel, r_bank, r_out);
    if (deblur->parsed()) return cmd_deblur(g, d_input, d_bank);
    if (bench->parsed()) return cmd_bench(g, b_iters);
    if (mask->parsed()) return cmd_mask(g, m_white, m_dark, m_threshold, m_out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
