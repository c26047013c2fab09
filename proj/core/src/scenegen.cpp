#include "lumen/scenegen.hpp"

#include <cmath>

#include "lumen/rng.hpp"

namespace lumen {

namespace {

// Half-extent of axis `a`.
double half(const BoxScene &s, int a) { return 0.5 * s.extents[a]; }

// Face index -> (fixed axis, sign of the fixed coordinate).
constexpr int kFaceAxis[6] = {0, 0, 1, 1, 2, 2};
constexpr double kFaceSign[6] = {-1, +1, -1, +1, -1, +1};

// In-plane axes (u, v) of each face.
constexpr int kFaceU[6] = {1, 1, 0, 0, 0, 0};
constexpr int kFaceV[6] = {2, 2, 2, 2, 1, 1};

int texel_of(double coord, double half_extent, int res) {
    int i = static_cast<int>((coord + half_extent) / (2.0 * half_extent) * res);
    if (i < 0) i = 0;
    if (i >= res) i = res - 1;
    return i;
}

void check_params(const SceneParams &p) {
    for (int a = 0; a < 3; ++a)
        if (!(p.extent_min[a] > 0.0) || p.extent_max[a] < p.extent_min[a])
            throw std::invalid_argument("sample_scene: empty or nonpositive extent range");
    if (p.lights_min < 1 || p.lights_max < p.lights_min)
        throw std::invalid_argument("sample_scene: light count range must allow >= 1 light");
    if (!(p.emission_min > 0.0) || p.emission_max < p.emission_min)
        throw std::invalid_argument("sample_scene: empty emission range");
    if (!(p.ambient > 0.0))
        throw std::invalid_argument("sample_scene: ambient must be positive");
    if (p.face_res < 1)
        throw std::invalid_argument("sample_scene: face_res must be >= 1");
}

}  // namespace

BoxScene sample_scene(std::uint64_t seed, const SceneParams &params) {
    check_params(params);
    Rng rng(seed);
    BoxScene s;
    for (int a = 0; a < 3; ++a)
        s.extents[a] = rng.uniform(params.extent_min[a], params.extent_max[a]);
    s.ambient = params.ambient;

    const int res = params.face_res;
    for (auto &f : s.faces) {
        f.res = res;
        f.albedo.assign(static_cast<std::size_t>(res) * res * 3, 0.0f);
        f.emission.assign(static_cast<std::size_t>(res) * res * 3, 0.0f);
        // Low-frequency albedo: bilinear blend of four random corner colors.
        double corner[4][3];
        for (auto &c : corner)
            for (double &v : c) v = rng.uniform(0.15, 0.75);
        for (int j = 0; j < res; ++j) {
            double tv = res > 1 ? static_cast<double>(j) / (res - 1) : 0.5;
            for (int i = 0; i < res; ++i) {
                double tu = res > 1 ? static_cast<double>(i) / (res - 1) : 0.5;
                for (int ch = 0; ch < 3; ++ch) {
                    double v = (1 - tv) * ((1 - tu) * corner[0][ch] + tu * corner[1][ch]) +
                               tv * ((1 - tu) * corner[2][ch] + tu * corner[3][ch]);
                    f.albedo[(static_cast<std::size_t>(j) * res + i) * 3 + ch] =
                        static_cast<float>(v);
                }
            }
        }
    }

    // Rectangular emissive patches; intensity log-uniform over the configured
    // multiple-of-ambient range, overlaps accumulate.
    int n_lights = rng.uniform_int(params.lights_min, params.lights_max);
    for (int li = 0; li < n_lights; ++li) {
        int face = rng.uniform_int(0, 5);
        FaceTexture &f = s.faces[face];
        int max_half = std::max(0, res / 6);
        int hw = rng.uniform_int(0, max_half);
        int hh = rng.uniform_int(0, max_half);
        int ci = rng.uniform_int(hw, res - 1 - hw);
        int cj = rng.uniform_int(hh, res - 1 - hh);
        double intensity =
            params.ambient *
            std::exp(rng.uniform(std::log(params.emission_min), std::log(params.emission_max)));
        double tint[3];
        double tmax = 0;
        for (double &t : tint) {
            t = rng.uniform(0.6, 1.0);
            tmax = std::max(tmax, t);
        }
        for (int j = cj - hh; j <= cj + hh; ++j)
            for (int i = ci - hw; i <= ci + hw; ++i)
                for (int ch = 0; ch < 3; ++ch)
                    f.emission[(static_cast<std::size_t>(j) * res + i) * 3 + ch] +=
                        static_cast<float>(intensity * tint[ch] / tmax);
    }
    return s;
}

EnvMap render_panorama(const BoxScene &s, const Vec3 &cam, int height, int width) {
    for (int a = 0; a < 3; ++a)
        if (!(std::abs(cam[a]) < half(s, a) - 1e-12))
            throw std::invalid_argument("render_panorama: camera must be strictly inside the box");

    EnvMap out(height, width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            Vec3 d = pixel_to_direction(r, c, height, width);
            // Exit distance per slab; the nearest positive hit picks the face.
            double t_best = 0;
            int face = -1;
            for (int a = 0; a < 3; ++a) {
                if (d[a] == 0.0) continue;
                double sign = d[a] > 0 ? 1.0 : -1.0;
                double t = (sign * half(s, a) - cam[a]) / d[a];
                if (face < 0 || t < t_best) {
                    t_best = t;
                    face = 2 * a + (sign > 0 ? 1 : 0);
                }
            }
            Vec3 p = cam + t_best * d;
            const FaceTexture &f = s.faces[face];
            int ui = texel_of(p[kFaceU[face]], half(s, kFaceU[face]), f.res);
            int vi = texel_of(p[kFaceV[face]], half(s, kFaceV[face]), f.res);
            std::size_t t_idx = (static_cast<std::size_t>(vi) * f.res + ui) * 3;
            for (int ch = 0; ch < 3; ++ch)
                out.at(r, c, ch) = static_cast<float>(
                    f.emission[t_idx + ch] + f.albedo[t_idx + ch] * s.ambient);
        }
    }
    return out;
}

Vec3 sample_camera_pose(const BoxScene &s, std::uint64_t seed) {
    Rng rng(seed);
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
        double m = 0.8 * half(s, a);  // 10% margin per side
        p[a] = rng.uniform(-m, m);
    }
    return p;
}

std::vector<EnvMap> augment_at(const BoxScene &s, const std::vector<Vec3> &poses,
                               int height, int width, int n_threads) {
    std::vector<EnvMap> maps(poses.size());
    parallel_for(0, static_cast<std::int64_t>(poses.size()), n_threads, [&](std::int64_t i) {
        maps[i] = render_panorama(s, poses[i], height, width);
    });
    return maps;
}

AugmentResult augment(const BoxScene &s, int n, int height, int width,
                      std::uint64_t seed, int n_threads) {
    if (n < 1) throw std::invalid_argument("augment: n must be >= 1");
    AugmentResult res;
    res.poses.resize(n);
    for (int i = 0; i < n; ++i)
        res.poses[i] = sample_camera_pose(s, mix_seed(seed, static_cast<std::uint64_t>(i)));
    res.maps = augment_at(s, res.poses, height, width, n_threads);
    return res;
}

std::vector<VPL> extract_vpls(const BoxScene &s, int res) {
    if (res < 1) throw std::invalid_argument("extract_vpls: res must be >= 1");
    std::vector<VPL> vpls;
    vpls.reserve(static_cast<std::size_t>(res) * res * 6);
    for (int face = 0; face < 6; ++face) {
        int ua = kFaceU[face], va = kFaceV[face], fa = kFaceAxis[face];
        double hu = half(s, ua), hv = half(s, va);
        double area = (2.0 * hu / res) * (2.0 * hv / res);
        const FaceTexture &f = s.faces[face];
        for (int j = 0; j < res; ++j) {
            for (int i = 0; i < res; ++i) {
                VPL v;
                double u = -hu + (i + 0.5) * 2.0 * hu / res;
                double w = -hv + (j + 0.5) * 2.0 * hv / res;
                v.position[fa] = kFaceSign[face] * half(s, fa);
                v.position[ua] = u;
                v.position[va] = w;
                v.normal[fa] = -kFaceSign[face];  // inward
                int ti = texel_of(u, hu, f.res);
                int tj = texel_of(w, hv, f.res);
                std::size_t t_idx = (static_cast<std::size_t>(tj) * f.res + ti) * 3;
                for (int ch = 0; ch < 3; ++ch)
                    v.color[ch] = f.emission[t_idx + ch] + f.albedo[t_idx + ch] * s.ambient;
                v.scale = area;
                vpls.push_back(v);
            }
        }
    }
    return vpls;
}

PoseSample sample_object_rotation(std::uint64_t seed) {
    Rng rng(seed);
    PoseSample p;
    p.theta_deg = rng.uniform(-180.0, 180.0);
    double x = rng.uniform();
    p.phi_deg = std::acos(2.0 * x - 1.0) * 180.0 / kPi;
    return p;
}

Mat3 rotation_matrix(const PoseSample &p) {
    return Mat3::rot_z(p.theta_deg * kPi / 180.0) * Mat3::rot_y(p.phi_deg * kPi / 180.0);
}

}  // namespace lumen
