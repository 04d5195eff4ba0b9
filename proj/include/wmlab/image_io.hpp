#pragma once

#include <filesystem>

#include "wmlab/types.hpp"

namespace wmlab {

/// Reads an 8- or 16-bit PNG (gray, RGB, with or without alpha) into [0,1] RGB.
Image read_png(const std::filesystem::path& path);

/// Writes 8-bit RGB; values are clamped and rounded to the 256-level grid.
void write_png(const std::filesystem::path& path, const Image& img);

/// Reads ASCII (P3) or binary (P6) PPM with any maxval up to 65535.
Image read_ppm(const std::filesystem::path& path);

/// Writes ASCII PPM (P3). maxval 255 or 65535.
void write_ppm(const std::filesystem::path& path, const Image& img, int maxval = 255);

/// Dispatches on extension (.png / .ppm).
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace wmlab
