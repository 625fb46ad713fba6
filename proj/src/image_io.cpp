#include "lfdeblur/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>
#include <vector>

#include "lfdeblur/errors.hpp"

namespace lfdeblur {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_or_throw(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw ValidationError("cannot open " + path);
  return f;
}

void write_f64le(std::FILE* f, const double* data, std::size_t n) {
  std::vector<unsigned char> buf(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v;
    std::memcpy(&v, &data[i], 8);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(v >> (8 * b));
  }
  if (std::fwrite(buf.data(), 1, buf.size(), f) != buf.size())
    throw ValidationError("short write");
}

void read_f64le(std::FILE* f, double* data, std::size_t n) {
  std::vector<unsigned char> buf(n * 8);
  if (std::fread(buf.data(), 1, buf.size(), f) != buf.size())
    throw ValidationError("truncated raster payload");
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
    std::memcpy(&data[i], &v, 8);
  }
}

}  // namespace

void save_raster(const std::string& path, const Raster& img, const std::string& domain) {
  FilePtr f = open_or_throw(path, "wb");
  std::fprintf(f.get(), "lfraw 1\nrows %d cols %d\ndomain %s\n", img.rows(), img.cols(),
               domain.c_str());
  write_f64le(f.get(), img.data(), img.size());
  if (std::ferror(f.get())) throw ValidationError("write failed for " + path);
}

namespace {

std::string read_line(std::FILE* f) {
  std::string line;
  int ch;
  while ((ch = std::fgetc(f)) != EOF && ch != '\n') line.push_back(static_cast<char>(ch));
  return line;
}

}  // namespace

Raster load_raster(const std::string& path, std::string* domain) {
  FilePtr f = open_or_throw(path, "rb");
  if (read_line(f.get()) != "lfraw 1")
    throw ValidationError(path + ": not an lfraw raster");
  int rows = 0, cols = 0;
  if (std::sscanf(read_line(f.get()).c_str(), "rows %d cols %d", &rows, &cols) != 2 ||
      rows < 1 || cols < 1)
    throw ValidationError(path + ": bad raster header");
  char dom[32] = {0};
  const std::string dline = read_line(f.get());
  if (std::sscanf(dline.c_str(), "domain %31s", dom) != 1)
    throw ValidationError(path + ": missing domain line");
  if (domain) *domain = dom;
  Raster img(rows, cols);
  read_f64le(f.get(), img.data(), img.size());
  return img;
}

void save_motion_kernel(const std::string& path, const MotionKernel& k) {
  FilePtr f = open_or_throw(path, "wb");
  std::fprintf(f.get(), "lfraw 1\nrows %d cols %d\ndomain kernel\ncenter %d %d\n",
               k.weights.rows(), k.weights.cols(), k.center.r, k.center.c);
  write_f64le(f.get(), k.weights.data(), k.weights.size());
  if (std::ferror(f.get())) throw ValidationError("write failed for " + path);
}

MotionKernel load_motion_kernel(const std::string& path) {
  FilePtr f = open_or_throw(path, "rb");
  if (read_line(f.get()) != "lfraw 1") throw ValidationError(path + ": not an lfraw raster");
  int rows = 0, cols = 0;
  if (std::sscanf(read_line(f.get()).c_str(), "rows %d cols %d", &rows, &cols) != 2 ||
      rows < 1 || cols < 1)
    throw ValidationError(path + ": bad kernel header");
  char dom[32] = {0};
  if (std::sscanf(read_line(f.get()).c_str(), "domain %31s", dom) != 1 ||
      std::string(dom) != "kernel")
    throw ValidationError(path + ": not a kernel raster");
  MotionKernel k;
  if (std::sscanf(read_line(f.get()).c_str(), "center %d %d", &k.center.r, &k.center.c) != 2)
    throw ValidationError(path + ": missing kernel center");
  k.weights = Raster(rows, cols);
  read_f64le(f.get(), k.weights.data(), k.weights.size());
  return k;
}

namespace {

/// RAII wrappers around the libpng setjmp protocol; on a libpng error the
/// destructor-side cleanup runs and a ValidationError is thrown afterwards.
struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw ValidationError("libpng: writer allocation failed");
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw ValidationError("libpng: reader allocation failed");
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

}  // namespace

void save_png16(const std::string& path, const Raster& img) {
  FilePtr f = open_or_throw(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png))) throw ValidationError("libpng: failed writing " + path);
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.cols(), img.rows(), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols()) * 2);
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      const unsigned u = static_cast<unsigned>(std::lround(v * 65535.0));
      row[2 * c] = static_cast<unsigned char>(u >> 8);
      row[2 * c + 1] = static_cast<unsigned char>(u & 0xff);
    }
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

Raster load_png16(const std::string& path) {
  FilePtr f = open_or_throw(path, "rb");
  PngReader rd;
  if (setjmp(png_jmpbuf(rd.png))) throw ValidationError("libpng: failed reading " + path);
  png_init_io(rd.png, f.get());
  png_read_info(rd.png, rd.info);
  png_set_palette_to_rgb(rd.png);
  png_set_expand_gray_1_2_4_to_8(rd.png);
  png_set_strip_alpha(rd.png);
  png_read_update_info(rd.png, rd.info);
  const int rows = png_get_image_height(rd.png, rd.info);
  const int cols = png_get_image_width(rd.png, rd.info);
  const int depth = png_get_bit_depth(rd.png, rd.info);
  const int channels = png_get_channels(rd.png, rd.info);
  if (depth != 8 && depth != 16) throw ValidationError(path + ": unsupported bit depth");
  Raster img(rows, cols);
  const double scale = (depth == 16) ? 65535.0 : 255.0;
  std::vector<unsigned char> row(static_cast<std::size_t>(cols) * channels * (depth / 8));
  for (int r = 0; r < rows; ++r) {
    png_read_row(rd.png, row.data(), nullptr);
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        const std::size_t base = (static_cast<std::size_t>(c) * channels + ch) * (depth / 8);
        const unsigned v = (depth == 16)
                               ? (static_cast<unsigned>(row[base]) << 8) | row[base + 1]
                               : row[base];
        acc += v / scale;
      }
      img(r, c) = acc / channels;
    }
  }
  png_read_end(rd.png, nullptr);
  return img;
}

void save_mask_png(const std::string& path, const Raster& mask) {
  FilePtr f = open_or_throw(path, "wb");
  PngWriter w;
  if (setjmp(png_jmpbuf(w.png))) throw ValidationError("libpng: failed writing " + path);
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, mask.cols(), mask.rows(), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<unsigned char> row(mask.cols());
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) row[c] = mask(r, c) != 0.0 ? 255 : 0;
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

Raster load_mask_png(const std::string& path) {
  Raster img = load_png16(path);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = img.data()[i] >= 0.5 ? 1.0 : 0.0;
  return img;
}

namespace {

bool has_png_ext(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0;
}

}  // namespace

void save_image(const std::string& path, const Raster& img, const std::string& domain) {
  if (has_png_ext(path))
    save_png16(path, img);
  else
    save_raster(path, img, domain);
}

Raster load_image(const std::string& path) {
  if (has_png_ext(path)) return load_png16(path);
  return load_raster(path);
}

}  // namespace lfdeblur
