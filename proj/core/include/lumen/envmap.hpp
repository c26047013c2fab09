#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/image.hpp"

namespace lumen {

// Direction convention: +z is up, theta = polar angle from +z, phi = azimuth
// in [-pi, pi) measured from +x toward +y. Pixel centers sit at
// theta = pi (r + 0.5) / H, phi = 2 pi (c + 0.5) / W - pi.

// Per-pixel solid angles of an equirectangular grid. Weights depend only on
// the row; stored once per row, accessors broadcast along columns.
struct SolidAngleMap {
    int height = 0;
    int width = 0;
    std::vector<double> row;  // steradians per pixel of each row

    double at(int r) const { return row[r]; }
    double at(int r, int /*c*/) const { return row[r]; }
    double total() const {
        double s = 0;
        for (double w : row) s += w;
        return s * width;
    }
};

// Row weight = (2 pi / W) (cos(pi r / H) - cos(pi (r+1) / H)); the cosine
// telescope makes the full-sphere sum exactly 4 pi.
SolidAngleMap solid_angle_weights(int height, int width);

Vec3 pixel_to_direction(int r, int c, int height, int width);

// Nearest pixel containing direction `d` (unit vector).
std::pair<int, int> direction_to_pixel(const Vec3 &d, int height, int width);

// Throws unless img is a well-formed envmap: W = 2H, all values finite, >= 0.
void validate_envmap(const Image3 &img, const char *where);

// Output pixel at direction d samples the input at R^-1 d, bilinear with
// azimuth wrap and polar clamp. Sample coordinates within 1e-9 px of a pixel
// center snap to it, so the identity and grid-aligned azimuth rotations
// reproduce input texels bit-exactly.
EnvMap rotate_envmap(const EnvMap &e, const Mat3 &R);

// x -> ln(x + 1) elementwise; NaN input rejected.
Image3 log_encode(const Image3 &img);
// y -> max(0, exp(y) - 1) elementwise; NaN input rejected.
Image3 log_decode(const Image3 &img);

// Scales so the 90th percentile (all channels jointly) maps to 0.8, then
// clips to [0, 1]. All-zero input throws DegenerateExposure.
Image3 reexpose_ldr(const Image3 &img);

// v -> round(255 * clip(v, 0, 1)^(1/gamma)), half away from zero.
std::vector<std::uint8_t> tonemap_display(const Image3 &img, double gamma = 1.4);

}  // namespace lumen
