#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>

#include "cli_util.hpp"
#include "commands.hpp"
#include "lumen/manifest.hpp"
#include "lumen/pfm.hpp"
#include "lumen/scenegen.hpp"

namespace fs = std::filesystem;

namespace lumen::cli {

namespace {

// --- gen-scenes ------------------------------------------------------------

struct GenScenesOpts {
    int count = 0;
    std::uint64_t seed = 1;
    std::string out;
    int height = 64;
    int threads = 1;
};

void run_gen_scenes(const GenScenesOpts &o) {
    ScenesManifest m = make_scenes(o.seed, o.count);
    fs::create_directories(o.out);
    write_scenes_manifest(m, (fs::path(o.out) / "scenes.json").string());

    // Base panorama per scene, camera at the room center.
    int w = 2 * o.height;
    parallel_for(0, o.count, o.threads, [&](std::int64_t i) {
        BoxScene s = sample_scene(m.scene_seeds[static_cast<std::size_t>(i)]);
        EnvMap pano = render_panorama(s, Vec3{0, 0, 0}, o.height, w);
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d.pfm", static_cast<int>(i));
        write_pfm(pano, (fs::path(o.out) / name).string());
    });

    RunRecord rec;
    rec.subcommand = "gen-scenes";
    rec.config = {{"count", o.count},   {"seed", o.seed},       {"out", o.out},
                  {"height", o.height}, {"width", w},           {"threads", o.threads}};
    rec.add_artifact("scenes.json");
    for (int i = 0; i < o.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d.pfm", i);
        rec.add_artifact(name);
    }
    rec.write(o.out);
}

// --- augment ---------------------------------------------------------------

struct AugmentOpts {
    std::string scenes;
    int per_scene = 4;
    int height = 64;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int threads = 1;
};

void run_augment(const AugmentOpts &o) {
    ScenesManifest scenes = read_scenes_manifest((fs::path(o.scenes) / "scenes.json").string());
    std::uint64_t seed = o.seed_set ? o.seed : scenes.seed;
    EnvmapManifest m =
        build_envmap_dataset(scenes, o.per_scene, o.height, 2 * o.height, seed, o.out, o.threads);

    RunRecord rec;
    rec.subcommand = "augment";
    rec.config = {{"scenes", o.scenes}, {"per-scene", o.per_scene}, {"height", o.height},
                  {"width", 2 * o.height}, {"seed", seed},          {"out", o.out},
                  {"threads", o.threads}};
    rec.add_artifact("manifest.json");
    for (const auto &row : m.rows) rec.add_artifact(row.file);
    rec.write(o.out);
}

// --- render-dataset --------------------------------------------------------

struct RenderDatasetOpts {
    std::string envmaps;
    std::string object = "sphere";
    std::vector<std::string> materials{"diffuse"};
    int size = 64;
    int per_env = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int threads = 1;
};

void run_render_dataset(const RenderDatasetOpts &o) {
    EnvmapManifest envs = read_envmap_manifest((fs::path(o.envmaps) / "manifest.json").string());
    std::uint64_t seed = o.seed_set ? o.seed : envs.seed;
    ObsManifest m = build_obs_dataset(envs, o.envmaps, o.object, o.materials, o.size, o.per_env,
                                      seed, o.out, o.threads);

    RunRecord rec;
    rec.subcommand = "render-dataset";
    rec.config = {{"envmaps", o.envmaps}, {"object", o.object}, {"materials", o.materials},
                  {"size", o.size},       {"per-env", o.per_env}, {"seed", seed},
                  {"out", o.out},         {"threads", o.threads}};
    rec.add_artifact("manifest.json");
    std::set<std::string> seen;
    for (const auto &row : m.rows) {
        if (seen.insert(row.normals).second) rec.add_artifact(row.normals);
        rec.add_artifact(row.rgb);
    }
    rec.write(o.out);
}

}  // namespace

void register_data_commands(CLI::App &app) {
    {
        auto o = std::make_shared<GenScenesOpts>();
        CLI::App *c = app.add_subcommand("gen-scenes",
                                         "Sample box-room scenes and render base panoramas");
        add_config_option(c);
        c->add_option("--count", o->count, "Number of scenes")->required()
            ->check(CLI::PositiveNumber);
        c->add_option("--seed", o->seed, "Master seed")->capture_default_str();
        c->add_option("--out", o->out, "Output directory")->required();
        c->add_option("--height", o->height, "Panorama rows (width is 2x)")
            ->capture_default_str()->check(CLI::PositiveNumber);
        add_threads_option(c, o->threads);
        c->callback([o] { run_gen_scenes(*o); });
    }
    {
        auto o = std::make_shared<AugmentOpts>();
        CLI::App *c = app.add_subcommand("augment",
                                         "Render per-scene envmaps from random viewpoints");
        add_config_option(c);
        c->add_option("--scenes", o->scenes, "Directory holding scenes.json")->required();
        c->add_option("--per-scene", o->per_scene, "Envmaps per scene")
            ->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--height", o->height, "Envmap rows (width is 2x)")
            ->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--seed", o->seed, "Dataset seed (default: the scenes' seed)");
        c->add_option("--out", o->out, "Output directory")->required();
        add_threads_option(c, o->threads);
        c->callback([o, c] {
            o->seed_set = c->count("--seed") > 0;
            run_augment(*o);
        });
    }
    {
        auto o = std::make_shared<RenderDatasetOpts>();
        CLI::App *c = app.add_subcommand("render-dataset",
                                         "Render object observations under each envmap");
        add_config_option(c);
        c->add_option("--envmaps", o->envmaps, "Directory holding an envmap manifest.json")
            ->required();
        c->add_option("--object", o->object,
                      "Object spec: sphere | spiky[:amp:freq] | normal-map PFM path")
            ->capture_default_str();
        c->add_option("--material", o->materials, "Material names (repeat or comma-separate)")
            ->capture_default_str()->delimiter(',');
        c->add_option("--size", o->size, "Observation resolution in pixels")
            ->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--per-env", o->per_env, "Object rotations per envmap")
            ->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--seed", o->seed, "Dataset seed (default: the envmaps' seed)");
        c->add_option("--out", o->out, "Output directory")->required();
        add_threads_option(c, o->threads);
        c->callback([o, c] {
            o->seed_set = c->count("--seed") > 0;
            run_render_dataset(*o);
        });
    }
}

}  // namespace lumen::cli
