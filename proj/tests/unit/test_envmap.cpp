#include <doctest.h>

#include <cmath>
#include <cstring>

#include "lumen/envmap.hpp"
#include "lumen/rng.hpp"
#include "lumen/sphharm.hpp"

using namespace lumen;

namespace {

EnvMap random_envmap(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 5.0) {
    EnvMap e(h, w);
    Rng rng(seed);
    for (auto &v : e.data) v = static_cast<float>(rng.uniform(lo, hi));
    return e;
}

double weighted_energy(const EnvMap &e) {
    SolidAngleMap w = solid_angle_weights(e.height, e.width);
    double s = 0.0;
    for (int r = 0; r < e.height; ++r)
        for (int c = 0; c < e.width; ++c)
            for (int ch = 0; ch < 3; ++ch) s += w.at(r) * e.at(r, c, ch);
    return s;
}

}  // namespace

TEST_SUITE("envmap") {

TEST_CASE("solid angle rows match the analytic band areas") {
    // Degenerate grids have closed forms: one pixel owns the whole sphere,
    // a 2x4 grid splits it into eight equal pieces.
    SolidAngleMap one = solid_angle_weights(1, 1);
    CHECK(one.row.size() == 1);
    CHECK(std::abs(one.at(0) - 4.0 * kPi) < 1e-12);

    SolidAngleMap eighth = solid_angle_weights(2, 4);
    CHECK(std::abs(eighth.at(0) - kPi / 2.0) < 1e-12);
    CHECK(std::abs(eighth.at(1) - kPi / 2.0) < 1e-12);
    CHECK(std::abs(eighth.at(0, 3) - kPi / 2.0) < 1e-12);

    SolidAngleMap w = solid_angle_weights(64, 128);
    for (int r : {0, 10, 31, 63}) {
        double want = (2.0 * kPi / 128.0) *
                      (std::cos(kPi * r / 64.0) - std::cos(kPi * (r + 1) / 64.0));
        CHECK(std::abs(w.at(r) - want) <= 1e-15 * want);
    }

    CHECK_THROWS_AS(solid_angle_weights(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(solid_angle_weights(4, -1), std::invalid_argument);
}

TEST_CASE("full-sphere totals telescope to 4 pi") {
    for (int h : {1, 2, 7, 64, 256}) {
        SolidAngleMap w = solid_angle_weights(h, 2 * h);
        CHECK(std::abs(w.total() - 4.0 * kPi) <= 1e-9 * 4.0 * kPi);
    }
    // The telescoping does not rely on W = 2H.
    SolidAngleMap odd = solid_angle_weights(3, 7);
    CHECK(std::abs(odd.total() - 4.0 * kPi) <= 1e-12 * 4.0 * kPi);
}

TEST_CASE("pixel centers map to the documented angles") {
    // 2x4 grid, pixel (0,1): theta = pi/4, phi = -pi/4.
    Vec3 d = pixel_to_direction(0, 1, 2, 4);
    double st = std::sin(kPi / 4.0);
    CHECK(std::abs(d.x - st * std::cos(-kPi / 4.0)) < 1e-12);
    CHECK(std::abs(d.y - st * std::sin(-kPi / 4.0)) < 1e-12);
    CHECK(std::abs(d.z - std::cos(kPi / 4.0)) < 1e-12);

    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 16; ++c) {
            auto [rr, cc] = direction_to_pixel(pixel_to_direction(r, c, 8, 16), 8, 16);
            CHECK(rr == r);
            CHECK(cc == c);
        }

    CHECK_THROWS_AS(pixel_to_direction(2, 0, 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(direction_to_pixel({1.0, 1.0, 0.0}, 8, 16), std::invalid_argument);
}

TEST_CASE("validate_envmap rejects bad shapes and values") {
    CHECK_THROWS_AS(validate_envmap(Image3(4, 6), "t"), std::invalid_argument);

    EnvMap ok(4, 8);
    CHECK_NOTHROW(validate_envmap(ok, "t"));

    EnvMap neg = ok;
    neg.at(1, 2, 0) = -0.5f;
    CHECK_THROWS_AS(validate_envmap(neg, "t"), std::invalid_argument);

    EnvMap nan = ok;
    nan.at(0, 0, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(validate_envmap(nan, "t"), std::invalid_argument);
}

TEST_CASE("identity and grid-aligned azimuth rotations are bit-exact") {
    EnvMap e = random_envmap(8, 16, 42);

    EnvMap same = rotate_envmap(e, Mat3::identity());
    CHECK(std::memcmp(same.data.data(), e.data.data(), e.size() * 4) == 0);

    // Rotating by k grid steps around +z moves content k columns in +phi;
    // the output pixel at column c samples the input at column c - k.
    const int k = 3, W = 16;
    EnvMap rot = rotate_envmap(e, Mat3::rot_z(2.0 * kPi * k / W));
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < W; ++c)
            for (int ch = 0; ch < 3; ++ch)
                CHECK(rot.at(r, c, ch) == e.at(r, (c - k + W) % W, ch));

    EnvMap full = rotate_envmap(e, Mat3::rot_z(2.0 * kPi));
    CHECK(std::memcmp(full.data.data(), e.data.data(), e.size() * 4) == 0);

    Mat3 scale;
    scale.m[0][0] = 2.0;
    CHECK_THROWS_AS(rotate_envmap(e, scale), std::invalid_argument);
}

TEST_CASE("rotation approximately preserves energy of smooth maps") {
    // Band-limited content is what bilinear resampling handles well; the 2%
    // bound is for this class, not for single-texel impulses.
    SHCoeffs c(2);
    Rng rng(7);
    for (int k = 0; k < 9; ++k)
        for (int ch = 0; ch < 3; ++ch)
            c.at(k, ch) = k == 0 ? 3.0 : rng.uniform(-0.4, 0.4);
    EnvMap e = reconstruct_clamped(c, 32, 64);

    Mat3 r = Mat3::rot_z(0.7) * Mat3::rot_y(0.3);
    EnvMap rot = rotate_envmap(e, r);
    double before = weighted_energy(e), after = weighted_energy(rot);
    CHECK(std::abs(after - before) <= 0.02 * before);
}

TEST_CASE("log encode/decode round-trips HDR values") {
    EnvMap e(2, 4);
    float vals[8] = {0.0f, 1.0f, 0.25f, 3.0f, 10.0f, 100.0f, 1000.0f, 10000.0f};
    for (int i = 0; i < 8; ++i)
        for (int ch = 0; ch < 3; ++ch) e.data[static_cast<std::size_t>(i) * 3 + ch] = vals[i];

    Image3 enc = log_encode(e);
    CHECK(std::abs(enc.at(0, 1, 0) - std::log(2.0)) < 1e-6);

    Image3 dec = log_decode(enc);
    for (std::size_t i = 0; i < e.size(); ++i) {
        double ref = e.data[i];
        CHECK(std::abs(dec.data[i] - ref) <= 1e-6 * std::max(1.0, ref));
    }

    // Negative log values decode to zero radiance, keeping envmaps valid.
    Image3 negy(1, 2);
    negy.data.assign(negy.data.size(), 0.0f);
    negy.at(0, 0, 0) = -2.0f;
    CHECK(log_decode(negy).at(0, 0, 0) == 0.0f);

    Image3 bad(1, 2);
    bad.at(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(log_encode(bad), std::invalid_argument);
    CHECK_THROWS_AS(log_decode(bad), std::invalid_argument);
}

TEST_CASE("reexpose_ldr pins the 90th percentile at 0.8") {
    Image3 flat(2, 4);
    flat.data.assign(flat.data.size(), 1.6f);
    Image3 out = reexpose_ldr(flat);
    for (float v : out.data) CHECK(std::abs(v - 0.8f) < 1e-6f);

    Image3 ref(2, 4);
    ref.data.assign(ref.data.size(), 0.8f);
    Image3 kept = reexpose_ldr(ref);
    for (float v : kept.data) CHECK(std::abs(v - 0.8f) < 1e-6f);

    // Dark image with one outlier: scale 10 brings the bulk to 0.8 and the
    // outlier clips at 1.
    Image3 dark(3, 2);
    dark.data.assign(dark.data.size(), 0.08f);
    dark.at(2, 1, 2) = 1.0f;
    Image3 lifted = reexpose_ldr(dark);
    CHECK(std::abs(lifted.at(0, 0, 0) - 0.8f) < 1e-6f);
    CHECK(lifted.at(2, 1, 2) == 1.0f);

    Image3 zero(2, 4);
    CHECK_THROWS_AS(reexpose_ldr(zero), DegenerateExposure);

    Image3 neg(1, 2);
    neg.at(0, 0, 0) = -1.0f;
    CHECK_THROWS_AS(reexpose_ldr(neg), std::invalid_argument);
}

TEST_CASE("tonemap_display quantizes half away from zero") {
    Image3 img(1, 2);
    img.at(0, 0, 0) = 0.0f;
    img.at(0, 0, 1) = 0.5f;
    img.at(0, 0, 2) = 1.0f;
    img.at(0, 1, 0) = 2.0f;   // clips to 1
    img.at(0, 1, 1) = -1.0f;  // clips to 0

    auto gamma1 = tonemap_display(img, 1.0);
    REQUIRE(gamma1.size() == 6);
    CHECK(gamma1[0] == 0);
    CHECK(gamma1[1] == 128);  // round(127.5) away from zero
    CHECK(gamma1[2] == 255);
    CHECK(gamma1[3] == 255);
    CHECK(gamma1[4] == 0);

    // Default gamma 1.4: 0.5^(1/1.4) * 255 = 155.42 -> 155.
    auto gamma14 = tonemap_display(img);
    CHECK(gamma14[1] == 155);

    CHECK_THROWS_AS(tonemap_display(img, 0.0), std::invalid_argument);
}

TEST_CASE("percentile interpolates between order statistics") {
    std::vector<float> v{4.0f, 1.0f, 3.0f, 2.0f};
    CHECK(std::abs(percentile(v, 0.5) - 2.5) < 1e-12);
    CHECK(std::abs(percentile(v, 0.9) - 3.7) < 1e-12);
    CHECK(percentile(v, 0.0) == 1.0);
    CHECK(percentile(v, 1.0) == 4.0);
    CHECK_THROWS_AS(percentile({}, 0.5), std::invalid_argument);
}

}  // TEST_SUITE
