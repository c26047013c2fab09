#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/envmap.hpp"
#include "lumen/image.hpp"

namespace lumen {

// Camera-space normal map, orthographic view along -z (so the view vector is
// +z). Masked-out pixels carry zero normals.
struct NormalMap {
    int height = 0;
    int width = 0;
    std::vector<float> n;            // 3 channels interleaved
    std::vector<std::uint8_t> mask;  // 1 = object pixel

    NormalMap() = default;
    NormalMap(int h, int w)
        : height(h), width(w),
          n(static_cast<std::size_t>(h) * w * 3, 0.0f),
          mask(static_cast<std::size_t>(h) * w, 0) {}

    Vec3 normal(int r, int c) const {
        std::size_t i = (static_cast<std::size_t>(r) * width + c) * 3;
        return {n[i], n[i + 1], n[i + 2]};
    }
};

// Lambertian + normalized-Phong lobe. rho_d + k_s <= 1 keeps the pair
// energy-conserving under the (s+2)/(2 pi) normalization.
struct Brdf {
    double rho_d = 0.5;
    double k_s = 0.0;
    double s = 1.0;
};

// Named materials spanning the diffuse -> specular axis:
// diffuse (0.5, 0, 1), rough (0.5, 0.3, 10), glossy (0.05, 0.9, 200).
Brdf material_brdf(const std::string &name);
void validate_brdf(const Brdf &b);

// Dense single-bounce transport: rows = masked object pixels in raster
// order, cols = envmap texels (row-major). Shared across channels.
struct TransportMatrix {
    int img_height = 0, img_width = 0;
    int env_height = 0, env_width = 0;
    std::vector<int> pixel_index;  // linear image index per row
    std::vector<float> t;          // rows() x cols(), row-major

    std::size_t rows() const { return pixel_index.size(); }
    std::size_t cols() const {
        return static_cast<std::size_t>(env_height) * env_width;
    }
};

NormalMap sphere_normal_map(int size);

// Sphere displaced by rho = 1 + a cos(k theta) cos(k phi); normals from
// central differences of the displaced surface.
NormalMap spiky_sphere_normal_map(int size, double amplitude, double frequency);

// Normals encoded as (n + 1) / 2 per channel; background pixels decode to
// zero-length vectors and are masked out.
NormalMap normal_map_from_image(const Image3 &img);
Image3 normal_map_to_image(const NormalMap &nm);

// T[i,j] = [rho_d/pi max(0, n.d) + k_s (s+2)/(2 pi) max(0, r.d)^s] dOmega_j
// with r = 2 (n.v) n - v, v = +z. No visibility term. Throws ResourceError
// if rows * cols * 4 bytes exceeds `budget_bytes`.
TransportMatrix build_transport(const NormalMap &nm, const Brdf &brdf, int env_height,
                                int env_width, std::size_t budget_bytes = 512u << 20,
                                int n_threads = 1);

// Matrix-vector product per channel; background pixels are 0. Summation
// runs in doubles over ascending texel index, matching render_direct exactly.
Image3 render_with_transport(const TransportMatrix &t, const EnvMap &e);

// Same sum without materializing T; the independent oracle for transport.
Image3 render_direct(const NormalMap &nm, const Brdf &brdf, const EnvMap &e,
                     int n_threads = 1);

// 6-channel predictor input: re-exposed LDR render (percentile over the
// masked pixels) plus the normal map, background zeroed.
struct ObjectObservation {
    Image3 rgb;     // [0, 1]
    NormalMap nm;
};

ObjectObservation make_observation(const NormalMap &nm, const Brdf &brdf, const EnvMap &e);

}  // namespace lumen
