#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lumen {

// Minimal 8-bit RGB PNG writer (IHDR + one zlib IDAT + IEND, filter 0 rows).
// `rgb` is row-major, top row first, 3 bytes per pixel.
void write_png(const std::vector<std::uint8_t> &rgb, int height, int width,
               const std::string &path);

}  // namespace lumen
