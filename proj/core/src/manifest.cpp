#include "lumen/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lumen/pfm.hpp"
#include "lumen/rng.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;

namespace lumen {

// ---------------------------------------------------------------------------

const char *split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

Split split_from_name(const std::string &name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw DatasetError("unknown split '" + name + "'");
}

Split split_for_index(std::size_t i, std::size_t n) {
    if (n == 0 || i >= n) throw std::invalid_argument("split_for_index: index out of range");
    std::size_t n_train = std::max<std::size_t>(1, n * 80 / 100);
    std::size_t n_val = std::min(n - n_train, n * 12 / 100);
    if (i < n_train) return Split::train;
    if (i < n_train + n_val) return Split::val;
    return Split::test;
}

// ---------------------------------------------------------------------------

namespace {

njson vec3_json(const Vec3 &v) { return njson::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const njson &j, const std::string &ctx) {
    if (!j.is_array() || j.size() != 3)
        throw DatasetError(ctx + ": expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

njson load_json(const std::string &path, const char *kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open manifest " + path);
    njson j;
    try {
        j = njson::parse(in);
    } catch (const std::exception &e) {
        throw DatasetError(path + ": " + e.what());
    }
    if (!j.is_object() || j.value("kind", std::string()) != kind)
        throw DatasetError(path + ": not a '" + std::string(kind) + "' manifest");
    return j;
}

void dump_json(const njson &j, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write manifest " + path);
    out << j.dump(2) << '\n';
    if (!out) throw ResourceError("short write on manifest " + path);
}

// fs::relative of target as seen from base_dir; falls back to an absolute
// path when no relative form exists.
std::string relative_to(const std::string &target, const std::string &base_dir) {
    std::error_code ec;
    fs::path rel = fs::relative(fs::absolute(target), fs::absolute(base_dir), ec);
    if (ec || rel.empty()) return fs::absolute(target).generic_string();
    return rel.generic_string();
}

}  // namespace

// ---------------------------------------------------------------------------

ScenesManifest make_scenes(std::uint64_t seed, int count, const SceneParams &params) {
    if (count < 1) throw std::invalid_argument("make_scenes: count must be >= 1");
    ScenesManifest m;
    m.seed = seed;
    m.params = params;
    m.scene_seeds.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        m.scene_seeds.push_back(mix_seed(seed, static_cast<std::uint64_t>(i)));
    return m;
}

void write_scenes_manifest(const ScenesManifest &m, const std::string &path) {
    njson p;
    p["extent_min"] = vec3_json(m.params.extent_min);
    p["extent_max"] = vec3_json(m.params.extent_max);
    p["lights_min"] = m.params.lights_min;
    p["lights_max"] = m.params.lights_max;
    p["emission_min"] = m.params.emission_min;
    p["emission_max"] = m.params.emission_max;
    p["ambient"] = m.params.ambient;
    p["face_res"] = m.params.face_res;
    njson j;
    j["kind"] = "scenes";
    j["seed"] = m.seed;
    j["params"] = p;
    j["scenes"] = m.scene_seeds;
    dump_json(j, path);
}

ScenesManifest read_scenes_manifest(const std::string &path) {
    njson j = load_json(path, "scenes");
    try {
        ScenesManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        const njson &p = j.at("params");
        m.params.extent_min = vec3_from(p.at("extent_min"), path + ": extent_min");
        m.params.extent_max = vec3_from(p.at("extent_max"), path + ": extent_max");
        m.params.lights_min = p.at("lights_min").get<int>();
        m.params.lights_max = p.at("lights_max").get<int>();
        m.params.emission_min = p.at("emission_min").get<double>();
        m.params.emission_max = p.at("emission_max").get<double>();
        m.params.ambient = p.at("ambient").get<double>();
        m.params.face_res = p.at("face_res").get<int>();
        m.scene_seeds = j.at("scenes").get<std::vector<std::uint64_t>>();
        return m;
    } catch (const njson::exception &e) {
        throw DatasetError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

EnvmapManifest build_envmap_dataset(const ScenesManifest &scenes, int per_scene, int height,
                                    int width, std::uint64_t seed, const std::string &out_dir,
                                    int n_threads) {
    if (per_scene < 1) throw std::invalid_argument("build_envmap_dataset: per_scene must be >= 1");
    if (height < 1 || width != 2 * height)
        throw std::invalid_argument("build_envmap_dataset: width must be 2 * height");
    if (scenes.scene_seeds.empty()) throw DatasetError("build_envmap_dataset: no scenes");
    fs::create_directories(out_dir);

    EnvmapManifest m;
    m.height = height;
    m.width = width;
    m.seed = seed;
    const std::size_t n = scenes.scene_seeds.size();
    m.rows.resize(n * static_cast<std::size_t>(per_scene));
    for (std::size_t i = 0; i < n; ++i) {
        Split sp = split_for_index(i, n);
        for (int k = 0; k < per_scene; ++k) {
            EnvmapRow &r = m.rows[i * static_cast<std::size_t>(per_scene) + k];
            char buf[48];
            std::snprintf(buf, sizeof buf, "env_%04zu_%02d.pfm", i, k);
            r.file = buf;
            r.scene = static_cast<int>(i);
            r.scene_seed = scenes.scene_seeds[i];
            r.split = sp;
        }
    }
    parallel_for(0, static_cast<std::int64_t>(n), n_threads, [&](std::int64_t i) {
        BoxScene s = sample_scene(scenes.scene_seeds[static_cast<std::size_t>(i)], scenes.params);
        for (int k = 0; k < per_scene; ++k) {
            EnvmapRow &r = m.rows[static_cast<std::size_t>(i) * per_scene + k];
            r.camera = sample_camera_pose(
                s, mix_seed(seed, static_cast<std::uint64_t>(i) * 65536 + k));
            EnvMap e = render_panorama(s, r.camera, height, width);
            write_pfm(e, (fs::path(out_dir) / r.file).string());
        }
    });
    write_envmap_manifest(m, (fs::path(out_dir) / "manifest.json").string());
    return m;
}

void write_envmap_manifest(const EnvmapManifest &m, const std::string &path) {
    njson rows = njson::array();
    for (const EnvmapRow &r : m.rows) {
        njson row;
        row["file"] = r.file;
        row["scene"] = r.scene;
        row["scene_seed"] = r.scene_seed;
        row["camera"] = vec3_json(r.camera);
        row["split"] = split_name(r.split);
        rows.push_back(std::move(row));
    }
    njson j;
    j["kind"] = "envmaps";
    j["height"] = m.height;
    j["width"] = m.width;
    j["seed"] = m.seed;
    j["rows"] = rows;
    dump_json(j, path);
}

EnvmapManifest read_envmap_manifest(const std::string &path) {
    njson j = load_json(path, "envmaps");
    try {
        EnvmapManifest m;
        m.height = j.at("height").get<int>();
        m.width = j.at("width").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const njson &row : j.at("rows")) {
            EnvmapRow r;
            r.file = row.at("file").get<std::string>();
            r.scene = row.at("scene").get<int>();
            r.scene_seed = row.at("scene_seed").get<std::uint64_t>();
            r.camera = vec3_from(row.at("camera"), path + ": camera");
            r.split = split_from_name(row.at("split").get<std::string>());
            m.rows.push_back(std::move(r));
        }
        return m;
    } catch (const njson::exception &e) {
        throw DatasetError(path + ": " + e.what());
    }
}

std::vector<std::size_t> rows_with_split(const EnvmapManifest &m, Split s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.rows.size(); ++i)
        if (m.rows[i].split == s) out.push_back(i);
    return out;
}

EnvMap load_envmap_row(const EnvmapManifest &m, const std::string &dir, std::size_t row) {
    if (row >= m.rows.size()) throw DatasetError("envmap row index out of range");
    const EnvmapRow &r = m.rows[row];
    EnvMap e;
    try {
        e = read_pfm((fs::path(dir) / r.file).string());
    } catch (const std::exception &ex) {
        throw DatasetError("envmap row " + std::to_string(row) + " ('" + r.file +
                           "'): " + ex.what());
    }
    if (e.height != m.height || e.width != m.width)
        throw DatasetError("envmap row " + std::to_string(row) + " ('" + r.file + "'): is " +
                           std::to_string(e.height) + "x" + std::to_string(e.width) +
                           ", manifest says " + std::to_string(m.height) + "x" +
                           std::to_string(m.width));
    return e;
}

std::vector<EnvMap> load_envmap_split(const EnvmapManifest &m, const std::string &dir, Split s) {
    std::vector<EnvMap> out;
    for (std::size_t i : rows_with_split(m, s)) out.push_back(load_envmap_row(m, dir, i));
    return out;
}

// ---------------------------------------------------------------------------

NormalMap object_normal_map(const std::string &spec, int size) {
    if (size < 4) throw std::invalid_argument("object_normal_map: size must be >= 4");
    if (spec == "sphere") return sphere_normal_map(size);
    if (spec == "spiky" || spec.rfind("spiky:", 0) == 0) {
        double amp = 0.15, freq = 5.0;
        if (spec.size() > 5 &&
            std::sscanf(spec.c_str(), "spiky:%lf:%lf", &amp, &freq) != 2)
            throw std::invalid_argument("object_normal_map: expected spiky:<amp>:<freq>, got '" +
                                        spec + "'");
        return spiky_sphere_normal_map(size, amp, freq);
    }
    NormalMap nm = normal_map_from_image(read_pfm(spec));
    if (nm.height != size || nm.width != size)
        throw DatasetError("normal map " + spec + " is " + std::to_string(nm.height) + "x" +
                           std::to_string(nm.width) + ", expected " + std::to_string(size) + "x" +
                           std::to_string(size));
    return nm;
}

ObsManifest build_obs_dataset(const EnvmapManifest &envs, const std::string &env_dir,
                              const std::string &object,
                              const std::vector<std::string> &materials, int size, int per_env,
                              std::uint64_t seed, const std::string &out_dir, int n_threads) {
    if (materials.empty()) throw std::invalid_argument("build_obs_dataset: no materials");
    if (per_env < 1) throw std::invalid_argument("build_obs_dataset: per_env must be >= 1");
    if (envs.rows.empty()) throw DatasetError("build_obs_dataset: envmap manifest has no rows");
    for (const std::string &mat : materials) material_brdf(mat);  // validates names

    NormalMap nm = object_normal_map(object, size);
    fs::create_directories(out_dir);
    write_pfm(normal_map_to_image(nm), (fs::path(out_dir) / "normals.pfm").string());

    ObsManifest m;
    m.object = object;
    m.size = size;
    m.env_height = envs.height;
    m.env_width = envs.width;
    m.seed = seed;

    for (std::size_t ei = 0; ei < envs.rows.size(); ++ei)
        for (const std::string &mat : materials)
            for (int k = 0; k < per_env; ++k) {
                std::size_t row_idx = m.rows.size();
                ObsRow r;
                char buf[48];
                std::snprintf(buf, sizeof buf, "obs_%05zu.pfm", row_idx);
                r.rgb = buf;
                r.normals = "normals.pfm";
                r.envmap = relative_to((fs::path(env_dir) / envs.rows[ei].file).string(), out_dir);
                r.material = mat;
                r.rotation = sample_object_rotation(mix_seed(seed, row_idx));
                r.env_row = static_cast<int>(ei);
                r.split = envs.rows[ei].split;
                m.rows.push_back(std::move(r));
            }

    parallel_for(0, static_cast<std::int64_t>(m.rows.size()), n_threads, [&](std::int64_t i) {
        const ObsRow &r = m.rows[static_cast<std::size_t>(i)];
        EnvMap base = load_envmap_row(envs, env_dir, static_cast<std::size_t>(r.env_row));
        EnvMap rotated = rotate_envmap(base, rotation_matrix(r.rotation));
        ObjectObservation obs = make_observation(nm, material_brdf(r.material), rotated);
        write_pfm(obs.rgb, (fs::path(out_dir) / r.rgb).string());
    });
    write_obs_manifest(m, (fs::path(out_dir) / "manifest.json").string());
    return m;
}

void write_obs_manifest(const ObsManifest &m, const std::string &path) {
    njson rows = njson::array();
    for (const ObsRow &r : m.rows) {
        njson row;
        row["rgb"] = r.rgb;
        row["normals"] = r.normals;
        row["envmap"] = r.envmap;
        row["material"] = r.material;
        row["rotation"] = njson{{"theta_deg", r.rotation.theta_deg},
                                {"phi_deg", r.rotation.phi_deg}};
        row["env_row"] = r.env_row;
        row["split"] = split_name(r.split);
        rows.push_back(std::move(row));
    }
    njson j;
    j["kind"] = "observations";
    j["object"] = m.object;
    j["size"] = m.size;
    j["env_height"] = m.env_height;
    j["env_width"] = m.env_width;
    j["seed"] = m.seed;
    j["rows"] = rows;
    dump_json(j, path);
}

ObsManifest read_obs_manifest(const std::string &path) {
    njson j = load_json(path, "observations");
    try {
        ObsManifest m;
        m.object = j.at("object").get<std::string>();
        m.size = j.at("size").get<int>();
        m.env_height = j.at("env_height").get<int>();
        m.env_width = j.at("env_width").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const njson &row : j.at("rows")) {
            ObsRow r;
            r.rgb = row.at("rgb").get<std::string>();
            r.normals = row.at("normals").get<std::string>();
            r.envmap = row.at("envmap").get<std::string>();
            r.material = row.at("material").get<std::string>();
            r.rotation.theta_deg = row.at("rotation").at("theta_deg").get<double>();
            r.rotation.phi_deg = row.at("rotation").at("phi_deg").get<double>();
            r.env_row = row.at("env_row").get<int>();
            r.split = split_from_name(row.at("split").get<std::string>());
            m.rows.push_back(std::move(r));
        }
        return m;
    } catch (const njson::exception &e) {
        throw DatasetError(path + ": " + e.what());
    }
}

std::vector<std::size_t> rows_with_split(const ObsManifest &m, Split s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.rows.size(); ++i)
        if (m.rows[i].split == s) out.push_back(i);
    return out;
}

ObjectObservation load_observation(const ObsManifest &m, const std::string &dir,
                                   std::size_t row) {
    if (row >= m.rows.size()) throw DatasetError("observation row index out of range");
    const ObsRow &r = m.rows[row];
    try {
        ObjectObservation obs;
        obs.rgb = read_pfm((fs::path(dir) / r.rgb).string());
        obs.nm = normal_map_from_image(read_pfm((fs::path(dir) / r.normals).string()));
        if (obs.rgb.height != m.size || obs.rgb.width != m.size || obs.nm.height != m.size ||
            obs.nm.width != m.size)
            throw DatasetError("observation row " + std::to_string(row) + " ('" + r.rgb +
                               "'): image size does not match the manifest's " +
                               std::to_string(m.size));
        return obs;
    } catch (const DatasetError &) {
        throw;
    } catch (const std::exception &ex) {
        throw DatasetError("observation row " + std::to_string(row) + " ('" + r.rgb +
                           "'): " + ex.what());
    }
}

EnvMap load_row_envmap(const ObsManifest &m, const std::string &dir, std::size_t row) {
    if (row >= m.rows.size()) throw DatasetError("observation row index out of range");
    const ObsRow &r = m.rows[row];
    EnvMap base;
    try {
        base = read_pfm((fs::path(dir) / r.envmap).string());
    } catch (const std::exception &ex) {
        throw DatasetError("observation row " + std::to_string(row) + " ('" + r.envmap +
                           "'): " + ex.what());
    }
    if (base.height != m.env_height || base.width != m.env_width)
        throw DatasetError("observation row " + std::to_string(row) + " ('" + r.envmap +
                           "'): envmap is " + std::to_string(base.height) + "x" +
                           std::to_string(base.width) + ", manifest says " +
                           std::to_string(m.env_height) + "x" + std::to_string(m.env_width));
    return rotate_envmap(base, rotation_matrix(r.rotation));
}

}  // namespace lumen
