#include "lumen/envmap.hpp"

#include <cmath>

namespace lumen {

SolidAngleMap solid_angle_weights(int height, int width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("solid_angle_weights: dimensions must be positive, got " +
                                    std::to_string(height) + "x" + std::to_string(width));
    SolidAngleMap m;
    m.height = height;
    m.width = width;
    m.row.resize(height);
    double col = 2.0 * kPi / width;
    for (int r = 0; r < height; ++r)
        m.row[r] = col * (std::cos(kPi * r / height) - std::cos(kPi * (r + 1) / height));
    return m;
}

Vec3 pixel_to_direction(int r, int c, int height, int width) {
    if (r < 0 || r >= height || c < 0 || c >= width)
        throw std::invalid_argument("pixel_to_direction: index (" + std::to_string(r) + "," +
                                    std::to_string(c) + ") outside " + std::to_string(height) +
                                    "x" + std::to_string(width));
    double theta = kPi * (r + 0.5) / height;
    double phi = 2.0 * kPi * (c + 0.5) / width - kPi;
    double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

namespace {

// Continuous pixel coordinates of a direction; rf in [-0.5, H-0.5],
// cf wraps in [-0.5, W-0.5).
void direction_to_coords(const Vec3 &d, int height, int width, double &rf, double &cf) {
    double z = d.z;
    if (z > 1.0) z = 1.0;
    if (z < -1.0) z = -1.0;
    double theta = std::acos(z);
    double phi = std::atan2(d.y, d.x);  // (-pi, pi]
    if (phi >= kPi) phi -= 2.0 * kPi;   // convention is [-pi, pi)
    rf = theta * height / kPi - 0.5;
    cf = (phi + kPi) * width / (2.0 * kPi) - 0.5;
}

}  // namespace

std::pair<int, int> direction_to_pixel(const Vec3 &d, int height, int width) {
    if (std::abs(d.dot(d) - 1.0) > 1e-9)
        throw std::invalid_argument("direction_to_pixel: direction is not unit length");
    double rf, cf;
    direction_to_coords(d, height, width, rf, cf);
    int r = static_cast<int>(std::lround(rf));
    if (r < 0) r = 0;
    if (r >= height) r = height - 1;
    int c = static_cast<int>(std::lround(cf));
    c = ((c % width) + width) % width;
    return {r, c};
}

void validate_envmap(const Image3 &img, const char *where) {
    if (img.height < 1 || img.width != 2 * img.height)
        throw std::invalid_argument(std::string(where) + ": envmap must satisfy W = 2H, got " +
                                    std::to_string(img.height) + "x" +
                                    std::to_string(img.width));
    for (float v : img.data)
        if (!std::isfinite(v) || v < 0.0f)
            throw std::invalid_argument(std::string(where) +
                                        ": envmap values must be finite and nonnegative");
}

EnvMap rotate_envmap(const EnvMap &e, const Mat3 &R) {
    if (e.height < 1 || e.width != 2 * e.height)
        throw std::invalid_argument("rotate_envmap: envmap must satisfy W = 2H");
    if (!R.is_rotation())
        throw std::invalid_argument("rotate_envmap: matrix is not a rotation (orthonormality "
                                    "or det within 1e-6 violated)");
    const int H = e.height, W = e.width;
    Mat3 Rin = R.transposed();  // R^-1 for a rotation
    EnvMap out(H, W);
    constexpr double kSnap = 1e-9;  // pixel units

    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            Vec3 d = pixel_to_direction(r, c, H, W);
            Vec3 s = Rin * d;
            double rf, cf;
            direction_to_coords(s, H, W, rf, cf);

            // Snap to exact pixel centers so grid-aligned resamples copy texels.
            double rn = std::round(rf), cn = std::round(cf);
            if (std::abs(rf - rn) < kSnap) rf = rn;
            if (std::abs(cf - cn) < kSnap) cf = cn;

            double fr = std::floor(rf), fc = std::floor(cf);
            int r0 = static_cast<int>(fr);
            int c0 = static_cast<int>(fc);
            double wr = rf - fr, wc = cf - fc;

            // Polar clamp keeps both row taps in range; azimuth wraps.
            int r1 = r0 + 1;
            if (r0 < 0) r0 = 0;
            if (r1 < 0) r1 = 0;
            if (r0 > H - 1) r0 = H - 1;
            if (r1 > H - 1) r1 = H - 1;
            int c0w = ((c0 % W) + W) % W;
            int c1w = (c0w + 1) % W;

            for (int ch = 0; ch < 3; ++ch) {
                if (wr == 0.0 && wc == 0.0) {
                    // Exact texel hit: copy, no arithmetic.
                    out.at(r, c, ch) = e.at(r0, c0w, ch);
                } else {
                    double v00 = e.at(r0, c0w, ch), v01 = e.at(r0, c1w, ch);
                    double v10 = e.at(r1, c0w, ch), v11 = e.at(r1, c1w, ch);
                    double v = (1 - wr) * ((1 - wc) * v00 + wc * v01) +
                               wr * ((1 - wc) * v10 + wc * v11);
                    out.at(r, c, ch) = static_cast<float>(v);
                }
            }
        }
    }
    return out;
}

Image3 log_encode(const Image3 &img) {
    Image3 out(img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        float v = img.data[i];
        if (std::isnan(v)) throw std::invalid_argument("log_encode: NaN input");
        out.data[i] = std::log1p(v);
    }
    return out;
}

Image3 log_decode(const Image3 &img) {
    Image3 out(img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        float v = img.data[i];
        if (std::isnan(v)) throw std::invalid_argument("log_decode: NaN input");
        float d = std::expm1(v);
        out.data[i] = d > 0.0f ? d : 0.0f;
    }
    return out;
}

Image3 reexpose_ldr(const Image3 &img) {
    for (float v : img.data)
        if (!std::isfinite(v) || v < 0.0f)
            throw std::invalid_argument("reexpose_ldr: values must be finite and nonnegative");
    double p90 = percentile(img.data, 0.9);
    if (p90 <= 0.0)
        throw DegenerateExposure("reexpose_ldr: 90th percentile is zero (image has no signal)");
    double scale = 0.8 / p90;
    Image3 out(img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = scale * img.data[i];
        out.data[i] = static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
    }
    return out;
}

std::vector<std::uint8_t> tonemap_display(const Image3 &img, double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("tonemap_display: gamma must be positive");
    std::vector<std::uint8_t> out(img.data.size());
    double inv_g = 1.0 / gamma;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = img.data[i];
        if (!(v > 0.0)) v = 0.0;  // also maps NaN to 0
        if (v > 1.0) v = 1.0;
        out[i] = static_cast<std::uint8_t>(std::round(255.0 * std::pow(v, inv_g)));
    }
    return out;
}

}  // namespace lumen
