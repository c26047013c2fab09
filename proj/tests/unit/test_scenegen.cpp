#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "lumen/envmap.hpp"
#include "lumen/scenegen.hpp"

using namespace lumen;

namespace {

// Box with constant per-face emission and zero albedo: texel radiance equals
// the face constant, so panorama values identify the face that was hit.
BoxScene flat_box(const Vec3 &ext, int res = 4) {
    BoxScene s;
    s.extents = ext;
    s.ambient = 0.05;
    for (int f = 0; f < 6; ++f) {
        FaceTexture &t = s.faces[static_cast<std::size_t>(f)];
        t.res = res;
        t.albedo.assign(static_cast<std::size_t>(res) * res * 3, 0.0f);
        t.emission.assign(static_cast<std::size_t>(res) * res * 3,
                          static_cast<float>(f + 1));
    }
    return s;
}

// Independent slab intersection: face index 2*axis + (d[axis] > 0).
int first_face_hit(const Vec3 &cam, const Vec3 &d, const Vec3 &ext) {
    double best_t = std::numeric_limits<double>::infinity();
    int best_face = -1;
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) continue;
        double half = ext[a] / 2.0;
        double t = ((d[a] > 0.0 ? half : -half) - cam[a]) / d[a];
        if (t > 0.0 && t < best_t) {
            best_t = t;
            best_face = 2 * a + (d[a] > 0.0 ? 1 : 0);
        }
    }
    return best_face;
}

double face_share(const BoxScene &s, const Vec3 &cam, int face, int h, int w) {
    EnvMap pano = render_panorama(s, cam, h, w);
    SolidAngleMap sa = solid_angle_weights(h, w);
    double hit = 0.0, all = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            all += sa.at(r);
            if (pano.at(r, c, 0) == static_cast<float>(face + 1)) hit += sa.at(r);
        }
    return hit / all;
}

}  // namespace

TEST_SUITE("scenegen") {

TEST_CASE("sample_scene is seed-deterministic") {
    BoxScene a = sample_scene(123);
    BoxScene b = sample_scene(123);
    CHECK(a.extents.x == b.extents.x);
    CHECK(a.extents.y == b.extents.y);
    CHECK(a.extents.z == b.extents.z);
    CHECK(a.ambient == b.ambient);
    for (int f = 0; f < 6; ++f) {
        const auto &fa = a.faces[static_cast<std::size_t>(f)];
        const auto &fb = b.faces[static_cast<std::size_t>(f)];
        REQUIRE(fa.res == fb.res);
        CHECK(fa.albedo == fb.albedo);
        CHECK(fa.emission == fb.emission);
    }

    BoxScene c = sample_scene(124);
    bool differs = a.extents.x != c.extents.x || a.extents.y != c.extents.y;
    for (int f = 0; f < 6 && !differs; ++f)
        differs = a.faces[static_cast<std::size_t>(f)].emission !=
                  c.faces[static_cast<std::size_t>(f)].emission;
    CHECK(differs);
}

TEST_CASE("sampled scenes respect the configured ranges") {
    SceneParams p;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        BoxScene s = sample_scene(seed, p);
        for (int a = 0; a < 3; ++a) {
            CHECK(s.extents[a] >= p.extent_min[a]);
            CHECK(s.extents[a] <= p.extent_max[a]);
        }
        CHECK(s.ambient == p.ambient);
        double emitted = 0.0;
        for (const FaceTexture &f : s.faces) {
            REQUIRE(f.res == p.face_res);
            for (float v : f.albedo) {
                CHECK(v >= 0.15f);
                CHECK(v <= 0.75f);
            }
            for (float v : f.emission) {
                CHECK(v >= 0.0f);
                emitted += v;
            }
        }
        CHECK(emitted > 0.0);  // at least one light patch
    }
}

TEST_CASE("degenerate scene parameters are rejected") {
    SceneParams p;
    p.lights_min = 0;
    p.lights_max = 0;
    CHECK_THROWS_AS(sample_scene(1, p), std::invalid_argument);

    p = SceneParams{};
    p.ambient = 0.0;
    CHECK_THROWS_AS(sample_scene(1, p), std::invalid_argument);

    p = SceneParams{};
    p.face_res = 0;
    CHECK_THROWS_AS(sample_scene(1, p), std::invalid_argument);

    p = SceneParams{};
    p.extent_min = {6.0, 2.5, 2.2};  // min > max on x
    CHECK_THROWS_AS(sample_scene(1, p), std::invalid_argument);

    p = SceneParams{};
    p.emission_min = 500.0;
    p.emission_max = 10.0;
    CHECK_THROWS_AS(sample_scene(1, p), std::invalid_argument);
}

TEST_CASE("uniform emissive box renders a constant panorama") {
    BoxScene s = flat_box({3.0, 4.0, 2.5});
    for (auto &f : s.faces)
        f.emission.assign(f.emission.size(), 1.0f);
    EnvMap pano = render_panorama(s, {0, 0, 0}, 8, 16);
    for (float v : pano.data) CHECK(v == 1.0f);
}

TEST_CASE("every panorama pixel hits the slab-predicted face") {
    BoxScene s = flat_box({2.5, 3.1, 2.2});
    Vec3 cam{0.1, 0.07, -0.05};
    EnvMap pano = render_panorama(s, cam, 16, 32);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 32; ++c) {
            int face = first_face_hit(cam, pixel_to_direction(r, c, 16, 32), s.extents);
            REQUIRE(face >= 0);
            for (int ch = 0; ch < 3; ++ch)
                CHECK(pano.at(r, c, ch) == static_cast<float>(face + 1));
        }
}

TEST_CASE("walking toward a wall grows its solid-angle share") {
    BoxScene s = flat_box({2.5, 3.1, 2.2});
    const int px = 1;  // +x face
    double center = face_share(s, {0, 0, 0}, px, 32, 64);
    double near_wall = face_share(s, {0.8, 0, 0}, px, 32, 64);
    CHECK(near_wall > center);

    double rows[4];
    int i = 0;
    for (double x : {0.0, 0.3, 0.6, 0.9}) rows[i++] = face_share(s, {x, 0, 0}, px, 32, 64);
    for (int j = 1; j < 4; ++j) CHECK(rows[j] > rows[j - 1]);
}

TEST_CASE("camera must be strictly inside the room") {
    BoxScene s = flat_box({2.0, 2.0, 2.0});
    CHECK_THROWS_AS(render_panorama(s, {1.0, 0, 0}, 4, 8), std::invalid_argument);
    CHECK_THROWS_AS(render_panorama(s, {0, -1.5, 0}, 4, 8), std::invalid_argument);
    CHECK_NOTHROW(render_panorama(s, {1.0 - 1e-6, 0, 0}, 4, 8));
}

TEST_CASE("camera poses stay inside the 10 percent margin") {
    BoxScene s = sample_scene(5);
    double max_frac[3] = {0, 0, 0};
    double mean[3] = {0, 0, 0};
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Vec3 p = sample_camera_pose(s, static_cast<std::uint64_t>(i));
        for (int a = 0; a < 3; ++a) {
            double frac = std::abs(p[a]) / (0.8 * s.extents[a] / 2.0);
            CHECK(frac <= 1.0);
            max_frac[a] = std::max(max_frac[a], frac);
            mean[a] += p[a] / n;
        }
    }
    for (int a = 0; a < 3; ++a) {
        CHECK(max_frac[a] > 0.95);  // the range is actually used
        CHECK(std::abs(mean[a]) < 0.03 * s.extents[a] / 2.0);
    }
}

TEST_CASE("augment reproduces per-pose panoramas deterministically") {
    BoxScene s = sample_scene(9);
    AugmentResult res = augment(s, 3, 8, 16, 77);
    REQUIRE(res.maps.size() == 3);
    REQUIRE(res.poses.size() == 3);
    for (int i = 0; i < 3; ++i) {
        EnvMap direct = render_panorama(s, res.poses[static_cast<std::size_t>(i)], 8, 16);
        CHECK(std::memcmp(res.maps[static_cast<std::size_t>(i)].data.data(),
                          direct.data.data(), direct.size() * 4) == 0);
    }

    AugmentResult rerun = augment(s, 3, 8, 16, 77);
    for (int i = 0; i < 3; ++i)
        CHECK(std::memcmp(rerun.maps[static_cast<std::size_t>(i)].data.data(),
                          res.maps[static_cast<std::size_t>(i)].data.data(),
                          res.maps[static_cast<std::size_t>(i)].size() * 4) == 0);

    std::vector<Vec3> poses{{0.1, 0.2, 0.3}};
    std::vector<EnvMap> at = augment_at(s, poses, 8, 16);
    EnvMap direct = render_panorama(s, poses[0], 8, 16);
    CHECK(std::memcmp(at[0].data.data(), direct.data.data(), direct.size() * 4) == 0);

    CHECK_THROWS_AS(augment(s, 0, 8, 16, 1), std::invalid_argument);
}

TEST_CASE("VPL scales tile each face exactly") {
    BoxScene s = sample_scene(11);
    for (int res : {1, 3, 8}) {
        std::vector<VPL> vpls = extract_vpls(s, res);
        REQUIRE(vpls.size() == static_cast<std::size_t>(6 * res * res));
        double face_area[6];
        const Vec3 &e = s.extents;
        face_area[0] = face_area[1] = e.y * e.z;
        face_area[2] = face_area[3] = e.x * e.z;
        face_area[4] = face_area[5] = e.x * e.y;
        for (int f = 0; f < 6; ++f) {
            double sum = 0.0;
            for (int i = 0; i < res * res; ++i)
                sum += vpls[static_cast<std::size_t>(f * res * res + i)].scale;
            CHECK(std::abs(sum - face_area[f]) <= 1e-9 * face_area[f]);
        }
    }
    CHECK_THROWS_AS(extract_vpls(s, 0), std::invalid_argument);
}

TEST_CASE("VPL normals point inward and positions lie on the walls") {
    BoxScene s = flat_box({2.0, 3.0, 4.0});
    std::vector<VPL> vpls = extract_vpls(s, 2);
    const int axis[6] = {0, 0, 1, 1, 2, 2};
    const double sign[6] = {-1, 1, -1, 1, -1, 1};
    for (int f = 0; f < 6; ++f)
        for (int i = 0; i < 4; ++i) {
            const VPL &v = vpls[static_cast<std::size_t>(f * 4 + i)];
            CHECK(std::abs(v.normal.norm() - 1.0) < 1e-12);
            // Inward = opposite the wall's outward side.
            CHECK(v.normal[axis[f]] == -sign[f]);
            CHECK(std::abs(v.position[axis[f]] - sign[f] * s.extents[axis[f]] / 2.0) < 1e-12);
            for (int a = 0; a < 3; ++a)
                CHECK(std::abs(v.position[a]) <= s.extents[a] / 2.0 + 1e-12);
        }
}

TEST_CASE("VPL energy is resolution-invariant for flat faces") {
    // Nearest-texel color sampling is exact when faces are uniform, so the
    // emitted power sum must not depend on the VPL grid resolution.
    BoxScene s = flat_box({2.5, 3.5, 2.0});
    double ref = -1.0;
    for (int res : {1, 4, 16}) {
        double sum = 0.0;
        for (const VPL &v : extract_vpls(s, res))
            sum += (v.color.x + v.color.y + v.color.z) * v.scale;
        if (ref < 0.0)
            ref = sum;
        else
            CHECK(std::abs(sum - ref) <= 1e-6 * ref);
    }
}

TEST_CASE("object rotations cover the sphere uniformly") {
    const int n = 100000;
    double mean_cos = 0.0, mean_theta = 0.0;
    double min_phi = 1e9, max_phi = -1e9;
    for (int i = 0; i < n; ++i) {
        PoseSample p = sample_object_rotation(static_cast<std::uint64_t>(i));
        CHECK(p.theta_deg >= -180.0);
        CHECK(p.theta_deg < 180.0);
        CHECK(p.phi_deg >= 0.0);
        CHECK(p.phi_deg <= 180.0);
        mean_cos += std::cos(p.phi_deg * kPi / 180.0) / n;
        mean_theta += p.theta_deg / n;
        min_phi = std::min(min_phi, p.phi_deg);
        max_phi = std::max(max_phi, p.phi_deg);
    }
    // cos(phi) is uniform on [-1,1]: 3 sigma of the mean is 0.0055.
    CHECK(std::abs(mean_cos) < 0.0055);
    CHECK(std::abs(mean_theta) < 1.0);  // 3 sigma for uniform [-180,180)
    CHECK(min_phi < 5.0);
    CHECK(max_phi > 175.0);
}

TEST_CASE("rotation_matrix composes Rz then Ry") {
    PoseSample p{37.0, 112.0};
    Mat3 want = Mat3::rot_z(37.0 * kPi / 180.0) * Mat3::rot_y(112.0 * kPi / 180.0);
    Mat3 got = rotation_matrix(p);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(got.m[i][j] - want.m[i][j]) < 1e-15);
    CHECK(got.is_rotation());

    Mat3 id = rotation_matrix({0.0, 0.0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(id.m[i][j] == (i == j ? 1.0 : 0.0));
}

}  // TEST_SUITE
