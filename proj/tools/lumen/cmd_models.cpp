#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "cli_util.hpp"
#include "commands.hpp"
#include "lumen/manifest.hpp"
#include "lumen/models.hpp"
#include "lumen/pfm.hpp"

namespace fs = std::filesystem;

namespace lumen::cli {

namespace {

njson loss_or_null(double v) { return std::isnan(v) ? njson() : njson(v); }

njson train_results(const TrainResult &r) {
    return {{"epochs_run", r.epochs_run},
            {"steps", r.steps},
            {"final_train_loss", r.final_train_loss},
            {"final_val_loss", loss_or_null(r.final_val_loss)},
            {"best_val_loss", loss_or_null(r.best_val_loss)}};
}

std::string record_dir(const std::string &out_file) {
    std::string d = fs::path(out_file).parent_path().string();
    return d.empty() ? std::string(".") : d;
}

// --- train-ae --------------------------------------------------------------

struct TrainAeOpts {
    std::string envmaps, out;
    AEConfig cfg;
    double stop_loss = 0.0;
    std::int64_t max_steps = 0;
    bool save_optimizer = false;
};

void run_train_ae(const TrainAeOpts &o) {
    EnvmapManifest m = read_envmap_manifest((fs::path(o.envmaps) / "manifest.json").string());
    AEConfig cfg = o.cfg;
    cfg.height = m.height;
    cfg.width = m.width;
    cfg.validate();

    auto train = load_envmap_split(m, o.envmaps, Split::train);
    auto val = load_envmap_split(m, o.envmaps, Split::val);

    fs::create_directories(o.out);
    Autoencoder ae = Autoencoder::make(cfg);
    TrainOptions opt;
    opt.log_path = (fs::path(o.out) / "train.jsonl").string();
    opt.checkpoint_path = (fs::path(o.out) / "ae.lpck").string();
    opt.stop_loss = o.stop_loss;
    opt.max_steps = o.max_steps;
    opt.save_optimizer = o.save_optimizer;
    TrainResult r = train_autoencoder(ae, train, val, opt);

    RunRecord rec;
    rec.subcommand = "train-ae";
    rec.config = {{"envmaps", o.envmaps},
                  {"out", o.out},
                  {"height", cfg.height},
                  {"width", cfg.width},
                  {"z", cfg.z},
                  {"enc-c1", cfg.enc_c1},
                  {"enc-c2", cfg.enc_c2},
                  {"res-blocks", cfg.res_blocks},
                  {"dec-seed-c", cfg.dec_seed_c},
                  {"lr", cfg.lr},
                  {"batch", cfg.batch},
                  {"epochs", cfg.epochs},
                  {"seed", cfg.seed},
                  {"stop-loss", o.stop_loss},
                  {"max-steps", o.max_steps},
                  {"save-optimizer", o.save_optimizer},
                  {"train-size", train.size()},
                  {"val-size", val.size()}};
    rec.results = train_results(r);
    rec.add_artifact("ae.lpck");
    rec.add_artifact("train.jsonl");
    rec.write(o.out);
}

// --- train-ip --------------------------------------------------------------

struct TrainIpOpts {
    std::string ae, obs, out;
    IPConfig cfg;
    double stop_loss = 0.0;
    std::int64_t max_steps = 0;
    bool save_optimizer = false;
};

void run_train_ip(const TrainIpOpts &o) {
    Autoencoder ae = load_autoencoder(o.ae);
    ObsManifest m = read_obs_manifest((fs::path(o.obs) / "manifest.json").string());
    IPConfig cfg = o.cfg;
    cfg.obs_size = m.size;
    cfg.z = ae.cfg.z;
    cfg.validate();

    auto gather = [&](Split s, std::vector<ObjectObservation> &obs, std::vector<EnvMap> &env) {
        for (std::size_t i : rows_with_split(m, s)) {
            obs.push_back(load_observation(m, o.obs, i));
            env.push_back(load_row_envmap(m, o.obs, i));
        }
    };
    std::vector<ObjectObservation> train_obs, val_obs;
    std::vector<EnvMap> train_env, val_env;
    gather(Split::train, train_obs, train_env);
    gather(Split::val, val_obs, val_env);

    fs::create_directories(o.out);
    Predictor p = Predictor::make(cfg);
    TrainOptions opt;
    opt.log_path = (fs::path(o.out) / "train.jsonl").string();
    opt.checkpoint_path = (fs::path(o.out) / "ip.lpck").string();
    opt.stop_loss = o.stop_loss;
    opt.max_steps = o.max_steps;
    opt.save_optimizer = o.save_optimizer;
    TrainResult r = train_predictor(p, ae, train_obs, train_env, val_obs, val_env, opt);

    RunRecord rec;
    rec.subcommand = "train-ip";
    rec.config = {{"ae", o.ae},
                  {"obs", o.obs},
                  {"out", o.out},
                  {"obs-size", cfg.obs_size},
                  {"z", cfg.z},
                  {"c1", cfg.c1},
                  {"fc", cfg.fc},
                  {"lr", cfg.lr},
                  {"batch", cfg.batch},
                  {"epochs", cfg.epochs},
                  {"seed", cfg.seed},
                  {"stop-loss", o.stop_loss},
                  {"max-steps", o.max_steps},
                  {"save-optimizer", o.save_optimizer},
                  {"train-size", train_obs.size()},
                  {"val-size", val_obs.size()}};
    rec.results = train_results(r);
    rec.add_artifact("ip.lpck");
    rec.add_artifact("train.jsonl");
    rec.write(o.out);
}

// --- encode / decode / predict ---------------------------------------------

struct EncodeOpts {
    std::string ae, envmap, out;
};

void run_encode(const EncodeOpts &o) {
    Autoencoder ae = load_autoencoder(o.ae);
    std::vector<float> z = encode_envmap(ae, read_pfm(o.envmap));

    njson j;
    j["z"] = z;
    std::ofstream f(o.out);
    f << j.dump() << '\n';
    if (!f) throw ResourceError("encode: cannot write '" + o.out + "'");

    RunRecord rec;
    rec.subcommand = "encode";
    rec.config = {{"ae", o.ae}, {"envmap", o.envmap}, {"out", o.out}};
    rec.add_artifact(fs::path(o.out).filename().string());
    rec.write(record_dir(o.out));
}

struct DecodeOpts {
    std::string ae, latent, out;
};

std::vector<float> read_latent(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ResourceError("latent file '" + path + "' is not readable");
    njson j;
    try {
        j = njson::parse(f);
        return j.at("z").get<std::vector<float>>();
    } catch (const njson::exception &e) {
        throw DatasetError("latent file '" + path + "': " + e.what());
    }
}

void run_decode(const DecodeOpts &o) {
    Autoencoder ae = load_autoencoder(o.ae);
    EnvMap e = decode_latent(ae, read_latent(o.latent));
    write_pfm(e, o.out);

    RunRecord rec;
    rec.subcommand = "decode";
    rec.config = {{"ae", o.ae}, {"latent", o.latent}, {"out", o.out}};
    rec.add_artifact(fs::path(o.out).filename().string());
    rec.write(record_dir(o.out));
}

struct PredictOpts {
    std::string ip, ae, rgb, normals, out, latent_out;
};

void run_predict(const PredictOpts &o) {
    Predictor p = load_predictor(o.ip);
    Autoencoder ae = load_autoencoder(o.ae);
    ObjectObservation obs;
    obs.rgb = read_pfm(o.rgb);
    obs.nm = normal_map_from_image(read_pfm(o.normals));

    std::vector<float> z = predict_latent(p, obs);
    EnvMap e = decode_latent(ae, z);
    write_pfm(e, o.out);
    if (!o.latent_out.empty()) {
        njson j;
        j["z"] = z;
        std::ofstream f(o.latent_out);
        f << j.dump() << '\n';
        if (!f) throw ResourceError("predict: cannot write '" + o.latent_out + "'");
    }

    RunRecord rec;
    rec.subcommand = "predict";
    rec.config = {{"ip", o.ip},           {"ae", o.ae}, {"rgb", o.rgb},
                  {"normals", o.normals}, {"out", o.out}, {"latent-out", o.latent_out}};
    rec.add_artifact(fs::path(o.out).filename().string());
    if (!o.latent_out.empty()) rec.add_artifact(o.latent_out, o.latent_out);
    rec.write(record_dir(o.out));
}

}  // namespace

void register_model_commands(CLI::App &app) {
    {
        auto o = std::make_shared<TrainAeOpts>();
        CLI::App *c = app.add_subcommand("train-ae", "Train the envmap autoencoder");
        add_config_option(c);
        c->add_option("--envmaps", o->envmaps, "Directory holding an envmap manifest.json")
            ->required();
        c->add_option("--out", o->out, "Output directory (ae.lpck, train.jsonl)")->required();
        c->add_option("--z", o->cfg.z, "Latent size")->capture_default_str();
        c->add_option("--enc-c1", o->cfg.enc_c1, "Encoder stage-1 channels")->capture_default_str();
        c->add_option("--enc-c2", o->cfg.enc_c2, "Encoder stage-2 channels")->capture_default_str();
        c->add_option("--res-blocks", o->cfg.res_blocks, "Encoder residual blocks")
            ->capture_default_str();
        c->add_option("--dec-seed-c", o->cfg.dec_seed_c, "Decoder seed channels")
            ->capture_default_str();
        c->add_option("--lr", o->cfg.lr, "Adam learning rate")->capture_default_str();
        c->add_option("--batch", o->cfg.batch, "Batch size")->capture_default_str();
        c->add_option("--epochs", o->cfg.epochs, "Training epochs")->capture_default_str();
        c->add_option("--seed", o->cfg.seed, "Init + batch-order seed")->capture_default_str();
        c->add_option("--stop-loss", o->stop_loss, "Stop once train loss reaches this")
            ->capture_default_str();
        c->add_option("--max-steps", o->max_steps, "Cap on optimizer steps")->capture_default_str();
        c->add_flag("--save-optimizer", o->save_optimizer, "Persist Adam moments for resuming");
        c->callback([o] { run_train_ae(*o); });
    }
    {
        auto o = std::make_shared<TrainIpOpts>();
        CLI::App *c = app.add_subcommand("train-ip",
                                         "Train the illumination predictor against a frozen AE");
        add_config_option(c);
        c->add_option("--ae", o->ae, "Autoencoder checkpoint")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--obs", o->obs, "Directory holding an observation manifest.json")
            ->required();
        c->add_option("--out", o->out, "Output directory (ip.lpck, train.jsonl)")->required();
        c->add_option("--c1", o->cfg.c1, "First conv channels")->capture_default_str();
        c->add_option("--fc", o->cfg.fc, "Hidden FC width")->capture_default_str();
        c->add_option("--lr", o->cfg.lr, "Adam learning rate")->capture_default_str();
        c->add_option("--batch", o->cfg.batch, "Batch size")->capture_default_str();
        c->add_option("--epochs", o->cfg.epochs, "Training epochs")->capture_default_str();
        c->add_option("--seed", o->cfg.seed, "Init + batch-order seed")->capture_default_str();
        c->add_option("--stop-loss", o->stop_loss, "Stop once train loss reaches this")
            ->capture_default_str();
        c->add_option("--max-steps", o->max_steps, "Cap on optimizer steps")->capture_default_str();
        c->add_flag("--save-optimizer", o->save_optimizer, "Persist Adam moments for resuming");
        c->callback([o] { run_train_ip(*o); });
    }
    {
        auto o = std::make_shared<EncodeOpts>();
        CLI::App *c = app.add_subcommand("encode", "Envmap PFM -> latent JSON");
        add_config_option(c);
        c->add_option("--ae", o->ae, "Autoencoder checkpoint")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--envmap", o->envmap, "Input envmap PFM")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--out", o->out, "Output latent JSON")->required();
        c->callback([o] { run_encode(*o); });
    }
    {
        auto o = std::make_shared<DecodeOpts>();
        CLI::App *c = app.add_subcommand("decode", "Latent JSON -> envmap PFM");
        add_config_option(c);
        c->add_option("--ae", o->ae, "Autoencoder checkpoint")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--latent", o->latent, "Input latent JSON {\"z\":[...]}")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--out", o->out, "Output envmap PFM")->required();
        c->callback([o] { run_decode(*o); });
    }
    {
        auto o = std::make_shared<PredictOpts>();
        CLI::App *c = app.add_subcommand("predict",
                                         "Estimate the envmap behind an object observation");
        add_config_option(c);
        c->add_option("--ip", o->ip, "Predictor checkpoint")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--ae", o->ae, "Autoencoder checkpoint (decoder)")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--rgb", o->rgb, "Observation PFM ([0,1] RGB)")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--normals", o->normals, "Normal-map PFM")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--out", o->out, "Output envmap PFM")->required();
        c->add_option("--latent-out", o->latent_out, "Also write the latent JSON here");
        c->callback([o] { run_predict(*o); });
    }
}

}  // namespace lumen::cli
