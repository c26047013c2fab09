#include "lumen/render.hpp"

#include <cmath>

namespace lumen {

namespace {

// Shading coefficient of one (normal, texel) pair: BRDF terms times the texel
// solid angle, rounded to float. Both render paths consume this exact float,
// which is what makes them agree to the last bit.
inline float shade_coeff(const Vec3 &n, const Brdf &b, const Vec3 &d, double dw) {
    double v = 0.0;
    double ndl = n.dot(d);
    if (ndl > 0.0) v += b.rho_d * (1.0 / kPi) * ndl;
    if (b.k_s > 0.0) {
        // r = 2 (n.v) n - v with v = (0,0,1).
        Vec3 refl{2.0 * n.z * n.x, 2.0 * n.z * n.y, 2.0 * n.z * n.z - 1.0};
        double rdl = refl.dot(d);
        if (rdl > 0.0) v += b.k_s * (b.s + 2.0) / (2.0 * kPi) * std::pow(rdl, b.s);
    }
    return static_cast<float>(v * dw);
}

// Pixel (r, c) -> camera-space point on the [-1, 1]^2 image plane; +x right,
// +y up, row 0 on top.
inline void pixel_plane(int r, int c, int size, double &u, double &v) {
    u = (c + 0.5) / size * 2.0 - 1.0;
    v = 1.0 - (r + 0.5) / size * 2.0;
}

}  // namespace

Brdf material_brdf(const std::string &name) {
    if (name == "diffuse") return {0.5, 0.0, 1.0};
    if (name == "rough") return {0.5, 0.3, 10.0};
    if (name == "glossy") return {0.05, 0.9, 200.0};
    throw std::invalid_argument("material_brdf: unknown material '" + name +
                                "' (expected diffuse|rough|glossy)");
}

void validate_brdf(const Brdf &b) {
    if (!(b.rho_d >= 0.0 && b.rho_d <= 1.0) || !(b.k_s >= 0.0 && b.k_s <= 1.0))
        throw std::invalid_argument("Brdf: rho_d and k_s must lie in [0, 1]");
    if (b.rho_d + b.k_s > 1.0 + 1e-12)
        throw std::invalid_argument("Brdf: rho_d + k_s must not exceed 1");
    if (!(b.s >= 1.0)) throw std::invalid_argument("Brdf: Phong exponent must be >= 1");
}

NormalMap sphere_normal_map(int size) {
    if (size < 2) throw std::invalid_argument("sphere_normal_map: size must be >= 2");
    NormalMap nm(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            double u, v;
            pixel_plane(r, c, size, u, v);
            double d2 = u * u + v * v;
            if (d2 > 1.0) continue;
            std::size_t i = (static_cast<std::size_t>(r) * size + c) * 3;
            nm.n[i] = static_cast<float>(u);
            nm.n[i + 1] = static_cast<float>(v);
            nm.n[i + 2] = static_cast<float>(std::sqrt(1.0 - d2));
            nm.mask[static_cast<std::size_t>(r) * size + c] = 1;
        }
    }
    return nm;
}

NormalMap spiky_sphere_normal_map(int size, double amplitude, double frequency) {
    if (size < 2) throw std::invalid_argument("spiky_sphere_normal_map: size must be >= 2");
    if (!(amplitude >= 0.0 && amplitude < 0.5))
        throw std::invalid_argument("spiky_sphere_normal_map: amplitude must be in [0, 0.5)");
    if (!(frequency >= 1.0))
        throw std::invalid_argument("spiky_sphere_normal_map: frequency must be >= 1");

    // Displaced surface point for spherical angles of the base sphere.
    auto surf = [&](double theta, double phi) -> Vec3 {
        double rho = 1.0 + amplitude * std::cos(frequency * theta) * std::cos(frequency * phi);
        double st = std::sin(theta);
        return Vec3{st * std::cos(phi), st * std::sin(phi), std::cos(theta)} * rho;
    };

    NormalMap nm(size, size);
    const double h = 1e-3;
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            double u, v;
            pixel_plane(r, c, size, u, v);
            double d2 = u * u + v * v;
            if (d2 > 1.0) continue;
            // Angles of the base-sphere point seen at this pixel; z toward
            // the camera, so theta is measured from the view axis.
            Vec3 base{u, v, std::sqrt(1.0 - d2)};
            double theta = std::acos(base.z);
            double phi = std::atan2(base.y, base.x);
            Vec3 du_t = (surf(theta + h, phi) - surf(theta - h, phi)) * (0.5 / h);
            Vec3 du_p = (surf(theta, phi + h) - surf(theta, phi - h)) * (0.5 / h);
            Vec3 n = du_t.cross(du_p);
            double len = n.norm();
            if (len < 1e-12) {
                n = base;  // tangent degeneracy at the exact pole pixel
            } else {
                n = n * (1.0 / len);
                if (n.dot(base) < 0.0) n = -n;  // orient outward
            }
            std::size_t i = (static_cast<std::size_t>(r) * size + c) * 3;
            nm.n[i] = static_cast<float>(n.x);
            nm.n[i + 1] = static_cast<float>(n.y);
            nm.n[i + 2] = static_cast<float>(n.z);
            nm.mask[static_cast<std::size_t>(r) * size + c] = 1;
        }
    }
    return nm;
}

NormalMap normal_map_from_image(const Image3 &img) {
    NormalMap nm(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            Vec3 n{2.0 * img.at(r, c, 0) - 1.0, 2.0 * img.at(r, c, 1) - 1.0,
                   2.0 * img.at(r, c, 2) - 1.0};
            double len = n.norm();
            if (len < 0.5) continue;  // background encodes to (0,0,0)
            if (std::abs(len - 1.0) > 1e-3)
                throw std::invalid_argument(
                    "normal_map_from_image: non-unit normal at pixel (" + std::to_string(r) +
                    "," + std::to_string(c) + ")");
            n = n * (1.0 / len);
            std::size_t i = (static_cast<std::size_t>(r) * img.width + c) * 3;
            nm.n[i] = static_cast<float>(n.x);
            nm.n[i + 1] = static_cast<float>(n.y);
            nm.n[i + 2] = static_cast<float>(n.z);
            nm.mask[static_cast<std::size_t>(r) * img.width + c] = 1;
        }
    }
    return nm;
}

Image3 normal_map_to_image(const NormalMap &nm) {
    Image3 img(nm.height, nm.width);
    for (int r = 0; r < nm.height; ++r)
        for (int c = 0; c < nm.width; ++c) {
            std::size_t i = (static_cast<std::size_t>(r) * nm.width + c) * 3;
            bool in = nm.mask[static_cast<std::size_t>(r) * nm.width + c] != 0;
            for (int ch = 0; ch < 3; ++ch)
                img.at(r, c, ch) = in ? 0.5f * (nm.n[i + ch] + 1.0f) : 0.5f;
        }
    return img;
}

TransportMatrix build_transport(const NormalMap &nm, const Brdf &brdf, int env_height,
                                int env_width, std::size_t budget_bytes, int n_threads) {
    validate_brdf(brdf);
    if (env_height < 1 || env_width != 2 * env_height)
        throw std::invalid_argument("build_transport: envmap grid requires W = 2H");

    TransportMatrix t;
    t.img_height = nm.height;
    t.img_width = nm.width;
    t.env_height = env_height;
    t.env_width = env_width;
    for (std::size_t i = 0; i < nm.mask.size(); ++i)
        if (nm.mask[i]) t.pixel_index.push_back(static_cast<int>(i));

    std::size_t need = t.rows() * t.cols() * sizeof(float);
    if (need > budget_bytes)
        throw ResourceError("build_transport: " + std::to_string(t.rows()) + "x" +
                            std::to_string(t.cols()) + " matrix needs " + std::to_string(need) +
                            " bytes, budget is " + std::to_string(budget_bytes));

    const std::size_t Q = t.cols();
    SolidAngleMap w = solid_angle_weights(env_height, env_width);
    std::vector<Vec3> dirs(Q);
    std::vector<double> dw(Q);
    for (int r = 0; r < env_height; ++r)
        for (int c = 0; c < env_width; ++c) {
            std::size_t j = static_cast<std::size_t>(r) * env_width + c;
            dirs[j] = pixel_to_direction(r, c, env_height, env_width);
            dw[j] = w.at(r);
        }

    t.t.resize(t.rows() * Q);
    parallel_for(0, static_cast<std::int64_t>(t.rows()), n_threads, [&](std::int64_t i) {
        int px = t.pixel_index[i];
        Vec3 n{nm.n[3 * static_cast<std::size_t>(px)], nm.n[3 * static_cast<std::size_t>(px) + 1],
               nm.n[3 * static_cast<std::size_t>(px) + 2]};
        float *row = t.t.data() + static_cast<std::size_t>(i) * Q;
        for (std::size_t j = 0; j < Q; ++j) row[j] = shade_coeff(n, brdf, dirs[j], dw[j]);
    });
    return t;
}

Image3 render_with_transport(const TransportMatrix &t, const EnvMap &e) {
    if (e.height != t.env_height || e.width != t.env_width)
        throw std::invalid_argument("render_with_transport: envmap is " +
                                    std::to_string(e.height) + "x" + std::to_string(e.width) +
                                    ", transport expects " + std::to_string(t.env_height) +
                                    "x" + std::to_string(t.env_width));
    const std::size_t Q = t.cols();
    Image3 img(t.img_height, t.img_width);
    for (std::size_t i = 0; i < t.rows(); ++i) {
        const float *row = t.t.data() + i * Q;
        double acc[3] = {0, 0, 0};
        for (std::size_t j = 0; j < Q; ++j) {
            double c = row[j];
            acc[0] += c * e.data[3 * j];
            acc[1] += c * e.data[3 * j + 1];
            acc[2] += c * e.data[3 * j + 2];
        }
        for (int ch = 0; ch < 3; ++ch)
            img.data[3 * static_cast<std::size_t>(t.pixel_index[i]) + ch] =
                static_cast<float>(acc[ch]);
    }
    return img;
}

Image3 render_direct(const NormalMap &nm, const Brdf &brdf, const EnvMap &e, int n_threads) {
    validate_brdf(brdf);
    if (e.width != 2 * e.height)
        throw std::invalid_argument("render_direct: envmap requires W = 2H");

    const std::size_t Q = static_cast<std::size_t>(e.height) * e.width;
    SolidAngleMap w = solid_angle_weights(e.height, e.width);
    std::vector<Vec3> dirs(Q);
    std::vector<double> dw(Q);
    for (int r = 0; r < e.height; ++r)
        for (int c = 0; c < e.width; ++c) {
            std::size_t j = static_cast<std::size_t>(r) * e.width + c;
            dirs[j] = pixel_to_direction(r, c, e.height, e.width);
            dw[j] = w.at(r);
        }

    Image3 img(nm.height, nm.width);
    std::vector<int> pixels;
    for (std::size_t i = 0; i < nm.mask.size(); ++i)
        if (nm.mask[i]) pixels.push_back(static_cast<int>(i));

    parallel_for(0, static_cast<std::int64_t>(pixels.size()), n_threads, [&](std::int64_t pi) {
        int px = pixels[pi];
        Vec3 n{nm.n[3 * static_cast<std::size_t>(px)], nm.n[3 * static_cast<std::size_t>(px) + 1],
               nm.n[3 * static_cast<std::size_t>(px) + 2]};
        double acc[3] = {0, 0, 0};
        for (std::size_t j = 0; j < Q; ++j) {
            // Identical float coefficient and accumulation order as the
            // transport path.
            double c = shade_coeff(n, brdf, dirs[j], dw[j]);
            acc[0] += c * e.data[3 * j];
            acc[1] += c * e.data[3 * j + 1];
            acc[2] += c * e.data[3 * j + 2];
        }
        for (int ch = 0; ch < 3; ++ch)
            img.data[3 * static_cast<std::size_t>(px) + ch] = static_cast<float>(acc[ch]);
    });
    return img;
}

ObjectObservation make_observation(const NormalMap &nm, const Brdf &brdf, const EnvMap &e) {
    Image3 hdr = render_direct(nm, brdf, e);
    std::vector<float> masked;
    masked.reserve(nm.mask.size() * 3);
    for (std::size_t i = 0; i < nm.mask.size(); ++i)
        if (nm.mask[i])
            for (int ch = 0; ch < 3; ++ch) masked.push_back(hdr.data[3 * i + ch]);
    if (masked.empty())
        throw std::invalid_argument("make_observation: normal map has no masked-in pixels");
    double p90 = percentile(masked, 0.9);
    if (p90 <= 0.0)
        throw DegenerateExposure("make_observation: render is fully dark (masked p90 = 0)");
    double scale = 0.8 / p90;

    ObjectObservation obs;
    obs.nm = nm;
    obs.rgb = Image3(nm.height, nm.width);
    for (std::size_t i = 0; i < nm.mask.size(); ++i) {
        if (!nm.mask[i]) continue;  // background stays exactly 0
        for (int ch = 0; ch < 3; ++ch) {
            double v = scale * hdr.data[3 * i + ch];
            obs.rgb.data[3 * i + ch] = static_cast<float>(v < 0 ? 0 : (v > 1 ? 1 : v));
        }
    }
    return obs;
}

}  // namespace lumen
