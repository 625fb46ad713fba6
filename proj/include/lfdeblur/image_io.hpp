#pragma once

#include <string>

#include "lfdeblur/psf.hpp"
#include "lfdeblur/raster.hpp"

namespace lfdeblur {

/// Raw raster container: a short text header
///   lfraw 1
///   rows <R> cols <C>
///   domain <texture|sensor|kernel|plain>
///   [center <r> <c>]
/// followed by row-major little-endian 64-bit floats.
void save_raster(const std::string& path, const Raster& img, const std::string& domain = "plain");
Raster load_raster(const std::string& path, std::string* domain = nullptr);

void save_motion_kernel(const std::string& path, const MotionKernel& k);
MotionKernel load_motion_kernel(const std::string& path);

/// 16-bit grayscale PNG; values clamped to [0,1]. Color inputs are collapsed
/// to their channel mean on load.
void save_png16(const std::string& path, const Raster& img);
Raster load_png16(const std::string& path);

/// 8-bit binary mask PNG (0 or 255).
void save_mask_png(const std::string& path, const Raster& mask);
Raster load_mask_png(const std::string& path);

/// Dispatch on extension: .png uses PNG, anything else the raw container.
void save_image(const std::string& path, const Raster& img, const std::string& domain = "plain");
Raster load_image(const std::string& path);

}  // namespace lfdeblur
