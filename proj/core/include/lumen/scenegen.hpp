#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/envmap.hpp"

namespace lumen {

// Axis-aligned box room centered at the origin. Face order: -x, +x, -y, +y,
// -z (floor), +z (ceiling). Each face carries a res x res albedo and
// emission texture; outgoing radiance of a texel is
// emission + albedo * ambient.
struct FaceTexture {
    int res = 0;
    std::vector<float> albedo;    // res * res * 3, in [0, 1]
    std::vector<float> emission;  // res * res * 3, >= 0
};

struct BoxScene {
    Vec3 extents;  // x, y, z side lengths in meters
    double ambient = 0.0;
    std::array<FaceTexture, 6> faces;
};

struct SceneParams {
    Vec3 extent_min{2.5, 2.5, 2.2};
    Vec3 extent_max{6.0, 8.0, 3.5};
    int lights_min = 1;
    int lights_max = 4;
    // Emission intensity range as a multiple of the ambient level.
    double emission_min = 10.0;
    double emission_max = 500.0;
    double ambient = 0.05;
    int face_res = 16;
};

// Object-rotation sample; theta azimuth, phi polar, both degrees.
struct PoseSample {
    double theta_deg = 0.0;  // [-180, 180)
    double phi_deg = 0.0;    // [0, 180]
};

// Virtual point light summarizing one face texel.
struct VPL {
    Vec3 position;
    Vec3 normal;  // unit, inward
    Vec3 color;   // radiance
    double scale = 0.0;  // texel area; sum(color * scale) preserves energy
};

// Deterministic procedural room: extents and wall albedo (low-frequency
// corner-interpolated noise) from `seed`, plus 1..4 rectangular emissive
// patches. Same seed reproduces the scene bit-exactly.
BoxScene sample_scene(std::uint64_t seed, const SceneParams &params = {});

// Analytic ray-box panorama from a camera strictly inside the room.
EnvMap render_panorama(const BoxScene &s, const Vec3 &cam, int height, int width);

// Uniform position in the box shrunk by a 10% margin per axis.
Vec3 sample_camera_pose(const BoxScene &s, std::uint64_t seed);

// Panoramas at explicitly given poses (deterministic core of augment).
std::vector<EnvMap> augment_at(const BoxScene &s, const std::vector<Vec3> &poses,
                               int height, int width, int n_threads = 1);

struct AugmentResult {
    std::vector<EnvMap> maps;
    std::vector<Vec3> poses;
};

// n panoramas at n seed-derived camera poses of the same room; viewpoint
// consistency holds by construction.
AugmentResult augment(const BoxScene &s, int n, int height, int width,
                      std::uint64_t seed, int n_threads = 1);

// One VPL per texel of a res x res grid on every face; color sampled from the
// face texture (nearest texel), scale = texel area.
std::vector<VPL> extract_vpls(const BoxScene &s, int res);

// theta uniform in [-180, 180); phi = acos(2x - 1) with x uniform in [0, 1).
PoseSample sample_object_rotation(std::uint64_t seed);

// Rotation applied to envmaps for a given pose: Rz(theta) * Ry(phi).
Mat3 rotation_matrix(const PoseSample &p);

}  // namespace lumen
