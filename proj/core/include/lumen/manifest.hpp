#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumen/envmap.hpp"
#include "lumen/render.hpp"
#include "lumen/scenegen.hpp"

namespace lumen {

// ---------------------------------------------------------------------------
// Dataset splits: contiguous 80/12/8 assignment by scene index, so augmented
// views of one scene never straddle a split boundary.

enum class Split { train, val, test };

const char *split_name(Split s);
Split split_from_name(const std::string &name);  // DatasetError on unknown
Split split_for_index(std::size_t i, std::size_t n);

// ---------------------------------------------------------------------------
// Scene list (gen-scenes output). Serialized as JSON with a "kind" tag;
// writers emit a stable field order so identical inputs give identical bytes.

struct ScenesManifest {
    std::uint64_t seed = 0;
    SceneParams params;
    std::vector<std::uint64_t> scene_seeds;
};

ScenesManifest make_scenes(std::uint64_t seed, int count, const SceneParams &params = {});
void write_scenes_manifest(const ScenesManifest &m, const std::string &path);
ScenesManifest read_scenes_manifest(const std::string &path);

// ---------------------------------------------------------------------------
// Envmap dataset (augment output): per-scene panoramas from randomized
// camera positions, PFM files plus manifest.json in one directory.

struct EnvmapRow {
    std::string file;  // PFM path relative to the manifest directory
    int scene = 0;
    std::uint64_t scene_seed = 0;
    Vec3 camera;
    Split split = Split::train;
};

struct EnvmapManifest {
    int height = 0, width = 0;
    std::uint64_t seed = 0;
    std::vector<EnvmapRow> rows;
};

EnvmapManifest build_envmap_dataset(const ScenesManifest &scenes, int per_scene, int height,
                                    int width, std::uint64_t seed, const std::string &out_dir,
                                    int n_threads = 1);
void write_envmap_manifest(const EnvmapManifest &m, const std::string &path);
EnvmapManifest read_envmap_manifest(const std::string &path);

std::vector<std::size_t> rows_with_split(const EnvmapManifest &m, Split s);
EnvMap load_envmap_row(const EnvmapManifest &m, const std::string &dir, std::size_t row);
std::vector<EnvMap> load_envmap_split(const EnvmapManifest &m, const std::string &dir, Split s);

// ---------------------------------------------------------------------------
// Observation dataset (render-dataset output). Rows pair a rendered
// observation with the panorama it was lit by and the object rotation that
// was applied; consumers reconstruct the ground-truth envmap by rotating the
// referenced panorama, so targets are never stored twice.

struct ObsRow {
    std::string rgb;      // re-exposed LDR render, PFM
    std::string normals;  // (n+1)/2-encoded normal map, PFM
    std::string envmap;   // source panorama, relative to the obs manifest directory
    std::string material;
    PoseSample rotation;
    int env_row = 0;  // row index in the source envmap manifest
    Split split = Split::train;
};

struct ObsManifest {
    std::string object;  // "sphere", "spiky[:a:f]", or a normal-map PFM path
    int size = 0;
    int env_height = 0, env_width = 0;
    std::uint64_t seed = 0;
    std::vector<ObsRow> rows;
};

// Resolves an object spec: "sphere", "spiky" (optionally "spiky:amp:freq"),
// or a path to a PFM-encoded normal map (resized maps are not supported; the
// file must already be size x size).
NormalMap object_normal_map(const std::string &spec, int size);

ObsManifest build_obs_dataset(const EnvmapManifest &envs, const std::string &env_dir,
                              const std::string &object,
                              const std::vector<std::string> &materials, int size, int per_env,
                              std::uint64_t seed, const std::string &out_dir, int n_threads = 1);
void write_obs_manifest(const ObsManifest &m, const std::string &path);
ObsManifest read_obs_manifest(const std::string &path);

std::vector<std::size_t> rows_with_split(const ObsManifest &m, Split s);
ObjectObservation load_observation(const ObsManifest &m, const std::string &dir, std::size_t row);
EnvMap load_row_envmap(const ObsManifest &m, const std::string &dir, std::size_t row);

}  // namespace lumen
