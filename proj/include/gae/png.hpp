#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gae {

/// Writes an 8-bit grayscale PNG; `pixels` is row-major, width*height bytes.
void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

struct PngInfo {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

/// Reads the IHDR chunk of a PNG file.
PngInfo read_png_info(const std::filesystem::path& path);

}  // namespace gae
