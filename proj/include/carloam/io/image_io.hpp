// 8-bit RGB image I/O: PPM (P6) always, PNG when libpng is available.

#pragma once

#include <string>

#include "carloam/camera.hpp"

namespace carloam {

/// Dispatches on the file extension (.png / .ppm). Throws on open or
/// decode failure, or when PNG support is compiled out.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

/// True when PNG read/write was compiled in.
bool png_supported();

}  // namespace carloam
