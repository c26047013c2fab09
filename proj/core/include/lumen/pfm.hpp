#pragma once

#include <string>

#include "lumen/common.hpp"
#include "lumen/image.hpp"

namespace lumen {

// Color PFM: header "PF\n<width> <height>\n-1.0\n", then 32-bit little-endian
// float triplets, rows stored bottom-to-top. In-memory images are top-row
// first, so rows are flipped on both paths; payload bytes round-trip exactly.
// Grayscale "Pf" is rejected (UnsupportedFormat). Other malformed input
// raises FormatError carrying the byte offset of the failure.
Image3 read_pfm(const std::string &path);
void write_pfm(const Image3 &img, const std::string &path);

}  // namespace lumen
