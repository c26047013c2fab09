#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lumen {

// 3-channel float image, row-major, top row first, channels interleaved.
struct Image3 {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // height * width * 3

    Image3() = default;
    Image3(int h, int w) : height(h), width(w) {
        if (h < 1 || w < 1)
            throw std::invalid_argument("Image3: dimensions must be positive, got " +
                                        std::to_string(h) + "x" + std::to_string(w));
        data.assign(static_cast<std::size_t>(h) * w * 3, 0.0f);
    }

    float &at(int r, int c, int ch) {
        return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }
    float at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Image3 &o) const {
        return height == o.height && width == o.width;
    }
};

// HDR radiance panorama in equirectangular layout; width = 2 * height.
// Alias rather than wrapper: every pixel-level routine applies unchanged,
// and envmap-specific invariants are enforced by validate_envmap.
using EnvMap = Image3;

inline void require_same_shape(const Image3 &a, const Image3 &b, const char *where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch, " +
                                    std::to_string(a.height) + "x" + std::to_string(a.width) +
                                    " vs " + std::to_string(b.height) + "x" +
                                    std::to_string(b.width));
}

// Sorted-order percentile with linear interpolation between order statistics:
// value at fractional index q * (n - 1).
inline double percentile(std::vector<float> values, double q) {
    if (values.empty())
        throw std::invalid_argument("percentile: empty value set");
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (static_cast<double>(values[lo + 1]) - values[lo]);
}

}  // namespace lumen
