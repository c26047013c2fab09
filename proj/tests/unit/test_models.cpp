#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "lumen/models.hpp"
#include "lumen/rng.hpp"
#include "lumen/sphharm.hpp"

#include "testutil.hpp"

using namespace lumen;
using testutil::TempDir;

namespace {

AEConfig tiny_ae() {
    AEConfig cfg;
    cfg.height = 8;
    cfg.width = 16;
    cfg.z = 8;
    cfg.enc_c1 = 4;
    cfg.enc_c2 = 8;
    cfg.res_blocks = 1;
    cfg.dec_seed_c = 8;
    cfg.batch = 2;
    cfg.epochs = 30;
    cfg.seed = 3;
    return cfg;
}

EnvMap smooth_envmap(int h, int w, std::uint64_t seed) {
    SHCoeffs c(2);
    Rng rng(seed);
    for (int k = 0; k < 9; ++k)
        for (int ch = 0; ch < 3; ++ch)
            c.at(k, ch) = k == 0 ? 3.0 : rng.uniform(-0.3, 0.3);
    return reconstruct_clamped(c, h, w);
}

std::vector<std::string> log_lines(const std::string &path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

std::string strip_seconds(const std::string &line) {
    auto pos = line.find("\"seconds\"");
    REQUIRE(pos != std::string::npos);
    return line.substr(0, pos);
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("AEConfig validation pins the architecture invariants") {
    CHECK_NOTHROW(AEConfig{}.validate());
    CHECK_NOTHROW(tiny_ae().validate());

    AEConfig bad = tiny_ae();
    bad.height = 20;  // not a power of two
    bad.width = 40;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = tiny_ae();
    bad.height = 4;  // below the smallest supported panorama
    bad.width = 8;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = tiny_ae();
    bad.width = 32;  // must stay 2 * height
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // Stage count doubles the 4x8 seed up to the output size.
    AEConfig st = tiny_ae();
    CHECK(st.dec_stages() == 1);
    st.height = 16;
    st.width = 32;
    CHECK(st.dec_stages() == 2);
    st.height = 32;
    st.width = 64;
    CHECK(st.dec_stages() == 3);
    st.height = 64;
    st.width = 128;
    CHECK(st.dec_stages() == 4);

    st.dec_seed_c = 4;  // 4 >> 3 = 0 channels at the last halving
    CHECK_THROWS_AS(st.validate(), ConfigError);

    IPConfig ip;
    CHECK_NOTHROW(ip.validate());
    ip.obs_size = 8;
    CHECK_THROWS_AS(ip.validate(), ConfigError);
}

TEST_CASE("builder parameter counts are frozen") {
    AEConfig cfg = tiny_ae();
    cfg.z = 3;
    cfg.enc_c1 = 4;
    cfg.enc_c2 = 6;
    cfg.res_blocks = 1;
    cfg.dec_seed_c = 4;
    auto enc = build_encoder<float>(cfg);
    auto dec = build_decoder<float>(cfg);
    CHECK(enc.param_count() == 1437u);
    CHECK(dec.param_count() == 631u);
}

TEST_CASE("envmap batches are log1p-encoded channel planes") {
    std::vector<EnvMap> maps{smooth_envmap(8, 16, 1), smooth_envmap(8, 16, 2)};
    nn::Tensor<float> t = envmap_batch(maps, {1, 0}, 8, 16);
    REQUIRE(t.shape == std::vector<int>{2, 3, 8, 16});
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 16; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                CHECK(t.at4(0, ch, r, c) == std::log1p(maps[1].at(r, c, ch)));
                CHECK(t.at4(1, ch, r, c) == std::log1p(maps[0].at(r, c, ch)));
            }

    EnvMap back = tensor_to_envmap(t, 0);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(std::abs(back.data[i] - maps[1].data[i]) <=
              1e-5f * std::max(1.0f, maps[1].data[i]));

    // Negative tensor values decode to zero radiance.
    nn::Tensor<float> negative({1, 3, 8, 16});
    negative.fill(-0.25f);
    EnvMap zero = tensor_to_envmap(negative, 0);
    for (float v : zero.data) CHECK(v == 0.0f);

    CHECK_THROWS_AS(envmap_batch(maps, {2}, 8, 16), std::invalid_argument);
    CHECK_THROWS_AS(envmap_batch(maps, {0}, 16, 32), std::invalid_argument);
}

TEST_CASE("ae_loss is the weighted mean absolute log error") {
    const int h = 4, w = 8;
    SolidAngleMap sa = solid_angle_weights(h, w);
    nn::Tensor<double> pred({2, 3, h, w});
    nn::Tensor<double> target({2, 3, h, w});
    target.fill(std::log(2.0));

    nn::Tensor<double> grad;
    double loss = ae_loss(pred, target, sa, &grad);
    CHECK(std::abs(loss - std::log(2.0)) < 1e-9);

    // Constant positive error per texel: gradient is -w_r / (3 sum(w) n).
    double denom = 3.0 * sa.total() * 2.0;
    CHECK(std::abs(grad.at4(0, 0, 0, 0) - (-sa.at(0) / denom)) < 1e-15);
    CHECK(std::abs(grad.at4(1, 2, 3, 5) - (-sa.at(3) / denom)) < 1e-15);

    // Finite-difference agreement on a non-constant configuration.
    Rng rng(5);
    for (auto &v : pred.data) v = rng.uniform(-1.0, 1.0);
    for (auto &v : target.data) v = rng.uniform(-1.0, 1.0);
    ae_loss(pred, target, sa, &grad);
    const double hstep = 1e-6;
    for (std::size_t i : {0ul, 37ul, 130ul}) {
        double saved = pred.data[i];
        pred.data[i] = saved + hstep;
        double lp = ae_loss(pred, target, sa);
        pred.data[i] = saved - hstep;
        double lm = ae_loss(pred, target, sa);
        pred.data[i] = saved;
        double numeric = (lp - lm) / (2.0 * hstep);
        CHECK(std::abs(grad.data[i] - numeric) < 1e-9);
    }

    SolidAngleMap negw = sa;
    negw.row[1] = -negw.row[1];
    CHECK_THROWS_AS(ae_loss(pred, target, negw), std::invalid_argument);

    nn::Tensor<double> wrong({2, 3, h, w + 2});
    CHECK_THROWS_AS(ae_loss(pred, wrong, sa), std::invalid_argument);
    nn::Tensor<double> off({2, 3, 8, 16});
    nn::Tensor<double> off2({2, 3, 8, 16});
    CHECK_THROWS_AS(ae_loss(off, off2, sa), std::invalid_argument);
}

TEST_CASE("ip_loss is the mean Euclidean distance") {
    nn::Tensor<double> pred({2, 2});
    nn::Tensor<double> target({2, 2});
    pred.data = {3.0, 4.0, 1.0, 1.0};
    target.data = {0.0, 0.0, 1.0, 1.0};

    nn::Tensor<double> grad;
    double loss = ip_loss(pred, target, &grad);
    CHECK(loss == 2.5);  // (5 + 0) / 2
    CHECK(std::abs(grad.data[0] - 0.3) < 1e-15);
    CHECK(std::abs(grad.data[1] - 0.4) < 1e-15);
    CHECK(grad.data[2] == 0.0);  // zero-distance row contributes no gradient
    CHECK(grad.data[3] == 0.0);

    nn::Tensor<double> rank1({4});
    CHECK_THROWS_AS(ip_loss(rank1, rank1), std::invalid_argument);
}

TEST_CASE("autoencoder construction and inference are deterministic") {
    AEConfig cfg = tiny_ae();
    Autoencoder a = Autoencoder::make(cfg);
    Autoencoder b = Autoencoder::make(cfg);
    CHECK(nn::state_hash(a.encoder) == nn::state_hash(b.encoder));
    CHECK(nn::state_hash(a.decoder) == nn::state_hash(b.decoder));

    EnvMap e = smooth_envmap(8, 16, 4);
    std::vector<float> z1 = encode_envmap(a, e);
    std::vector<float> z2 = encode_envmap(a, e);
    REQUIRE(z1.size() == 8u);
    CHECK(z1 == z2);

    EnvMap out = decode_latent(a, z1);
    CHECK(out.height == 8);
    CHECK(out.width == 16);
    for (float v : out.data) CHECK(v >= 0.0f);

    EnvMap round = autoencode(a, e);
    CHECK(round.height == 8);
    CHECK_NOTHROW(validate_envmap(round, "autoencode"));

    CHECK_THROWS_AS(encode_envmap(a, smooth_envmap(16, 32, 4)), std::invalid_argument);
    CHECK_THROWS_AS(decode_latent(a, std::vector<float>(5, 0.0f)), std::invalid_argument);
}

TEST_CASE("latent size mismatches between the model pair are ConfigError") {
    AEConfig acfg = tiny_ae();
    Autoencoder ae = Autoencoder::make(acfg);
    IPConfig pcfg;
    pcfg.obs_size = 16;
    pcfg.z = 16;  // AE uses 8
    pcfg.c1 = 4;
    pcfg.fc = 8;
    Predictor p = Predictor::make(pcfg);

    NormalMap nm = sphere_normal_map(16);
    ObjectObservation obs = make_observation(nm, material_brdf("diffuse"), smooth_envmap(8, 16, 9));
    CHECK_THROWS_AS(predict_envmap(p, ae, obs), ConfigError);

    ObjectObservation small = obs;
    small.rgb = Image3(8, 8);
    CHECK_THROWS_AS(predict_latent(p, small), std::invalid_argument);
}

TEST_CASE("train_autoencoder learns, logs, and reproduces bit-for-bit") {
    TempDir tmp;
    std::vector<EnvMap> train;
    for (std::uint64_t s = 0; s < 4; ++s) train.push_back(smooth_envmap(8, 16, 10 + s));

    auto run = [&](const std::string &log) {
        Autoencoder ae = Autoencoder::make(tiny_ae());
        TrainOptions opt;
        opt.log_path = tmp.file(log);
        TrainResult res = train_autoencoder(ae, train, {}, opt);
        return std::pair<TrainResult, std::uint64_t>(
            res, nn::state_hash(ae.encoder) ^ nn::state_hash(ae.decoder));
    };

    auto [res, hash] = run("a.jsonl");
    CHECK(res.epochs_run == 30);
    CHECK(res.steps == 60);  // 4 maps / batch 2, twice per epoch
    CHECK(std::isnan(res.final_val_loss));
    CHECK(std::isnan(res.best_val_loss));

    auto lines = log_lines(tmp.file("a.jsonl"));
    REQUIRE(lines.size() == 30u);
    double first_loss = 0.0, last_loss = 0.0, secs = 0.0;
    int epoch = 0;
    REQUIRE(std::sscanf(lines.front().c_str(),
                        "{\"epoch\":%d,\"train_loss\":%lf,\"val_loss\":null,\"seconds\":%lf}",
                        &epoch, &first_loss, &secs) == 3);
    CHECK(epoch == 1);
    REQUIRE(std::sscanf(lines.back().c_str(),
                        "{\"epoch\":%d,\"train_loss\":%lf,\"val_loss\":null,\"seconds\":%lf}",
                        &epoch, &last_loss, &secs) == 3);
    CHECK(epoch == 30);
    CHECK(last_loss < first_loss);
    CHECK(std::abs(last_loss - res.final_train_loss) <= 1e-9 * std::abs(last_loss));

    // Identical seeds give identical trajectories; only wall time may differ.
    auto [res2, hash2] = run("b.jsonl");
    CHECK(hash2 == hash);
    CHECK(res2.final_train_loss == res.final_train_loss);
    auto lines2 = log_lines(tmp.file("b.jsonl"));
    REQUIRE(lines2.size() == lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i)
        CHECK(strip_seconds(lines2[i]) == strip_seconds(lines[i]));

    CHECK_THROWS_AS(
        [&] {
            Autoencoder ae = Autoencoder::make(tiny_ae());
            train_autoencoder(ae, {}, {}, {});
        }(),
        DatasetError);
}

TEST_CASE("validation tracking restores the best parameters") {
    TempDir tmp;
    std::vector<EnvMap> train, val;
    for (std::uint64_t s = 0; s < 4; ++s) train.push_back(smooth_envmap(8, 16, 20 + s));
    val.push_back(smooth_envmap(8, 16, 30));

    AEConfig cfg = tiny_ae();
    cfg.epochs = 12;
    Autoencoder ae = Autoencoder::make(cfg);
    TrainOptions opt;
    opt.log_path = tmp.file("val.jsonl");
    TrainResult res = train_autoencoder(ae, train, val, opt);

    double best = 1e300, last = 0.0;
    for (const auto &line : log_lines(tmp.file("val.jsonl"))) {
        int epoch = 0;
        double tr = 0.0, vl = 0.0, secs = 0.0;
        REQUIRE(std::sscanf(line.c_str(),
                            "{\"epoch\":%d,\"train_loss\":%lf,\"val_loss\":%lf,\"seconds\":%lf}",
                            &epoch, &tr, &vl, &secs) == 4);
        best = std::min(best, vl);
        last = vl;
    }
    CHECK(std::abs(res.best_val_loss - best) <= 1e-9 * best);
    CHECK(std::abs(res.final_val_loss - last) <= 1e-9 * std::max(1.0, last));
    CHECK(res.best_val_loss <= res.final_val_loss + 1e-12);
}

TEST_CASE("stop conditions cut training where requested") {
    std::vector<EnvMap> train;
    for (std::uint64_t s = 0; s < 4; ++s) train.push_back(smooth_envmap(8, 16, 40 + s));

    Autoencoder ae = Autoencoder::make(tiny_ae());
    TrainOptions opt;
    opt.stop_loss = 1e9;  // any epoch satisfies it
    TrainResult res = train_autoencoder(ae, train, {}, opt);
    CHECK(res.epochs_run == 1);

    Autoencoder ae2 = Autoencoder::make(tiny_ae());
    TrainOptions opt2;
    opt2.max_steps = 3;  // 2 steps per epoch: stops inside epoch 2
    TrainResult res2 = train_autoencoder(ae2, train, {}, opt2);
    CHECK(res2.steps == 3);
    CHECK(res2.epochs_run == 2);
}

TEST_CASE("train_predictor fits frozen-encoder latents") {
    std::vector<EnvMap> env;
    for (std::uint64_t s = 0; s < 4; ++s) env.push_back(smooth_envmap(8, 16, 50 + s));
    NormalMap nm = sphere_normal_map(16);
    std::vector<ObjectObservation> obs;
    for (const EnvMap &e : env) obs.push_back(make_observation(nm, material_brdf("rough"), e));

    Autoencoder ae = Autoencoder::make(tiny_ae());
    IPConfig pcfg;
    pcfg.obs_size = 16;
    pcfg.z = 8;
    pcfg.c1 = 4;
    pcfg.fc = 8;
    pcfg.batch = 2;
    pcfg.epochs = 15;
    pcfg.seed = 5;

    TempDir tmp;
    Predictor p = Predictor::make(pcfg);
    TrainOptions opt;
    opt.log_path = tmp.file("ip.jsonl");
    TrainResult res = train_predictor(p, ae, obs, env, {}, {}, opt);
    CHECK(res.epochs_run == 15);

    auto lines = log_lines(tmp.file("ip.jsonl"));
    int epoch = 0;
    double first = 0.0, secs = 0.0;
    REQUIRE(std::sscanf(lines.front().c_str(),
                        "{\"epoch\":%d,\"train_loss\":%lf,\"val_loss\":null,\"seconds\":%lf}",
                        &epoch, &first, &secs) == 3);
    CHECK(res.final_train_loss < first);

    // The predictor now matches the AE's latent space, so inference composes.
    EnvMap predicted = predict_envmap(p, ae, obs[0]);
    CHECK(predicted.height == 8);
    CHECK_NOTHROW(validate_envmap(predicted, "predict"));

    IPConfig zbad = pcfg;
    zbad.z = 4;
    Predictor pz = Predictor::make(zbad);
    CHECK_THROWS_AS(train_predictor(pz, ae, obs, env, {}, {}, {}), ConfigError);

    std::vector<EnvMap> short_env(env.begin(), env.begin() + 3);
    CHECK_THROWS_AS(train_predictor(p, ae, obs, short_env, {}, {}, {}), DatasetError);
}

TEST_CASE("model checkpoints round-trip weights, configs, and moments") {
    TempDir tmp;
    std::vector<EnvMap> train;
    for (std::uint64_t s = 0; s < 2; ++s) train.push_back(smooth_envmap(8, 16, 60 + s));

    AEConfig cfg = tiny_ae();
    cfg.epochs = 3;
    Autoencoder ae = Autoencoder::make(cfg);
    TrainOptions opt;
    opt.checkpoint_path = tmp.file("ae.lpck");
    opt.save_optimizer = true;
    TrainResult res = train_autoencoder(ae, train, {}, opt);

    nn::Adam<float> adam;
    Autoencoder back = load_autoencoder(tmp.file("ae.lpck"), &adam);
    CHECK(back.cfg.height == cfg.height);
    CHECK(back.cfg.z == cfg.z);
    CHECK(nn::state_hash(back.encoder) == nn::state_hash(ae.encoder));
    CHECK(nn::state_hash(back.decoder) == nn::state_hash(ae.decoder));
    CHECK(adam.steps() == res.steps);
    CHECK_FALSE(adam.state().empty());

    EnvMap e = smooth_envmap(8, 16, 70);
    CHECK(encode_envmap(ae, e) == encode_envmap(back, e));

    // Plain save has no optimizer section to restore from.
    save_autoencoder(ae, tmp.file("plain.lpck"));
    nn::Adam<float> none;
    CHECK_THROWS_AS(load_autoencoder(tmp.file("plain.lpck"), &none), ConfigError);

    IPConfig pcfg;
    pcfg.obs_size = 16;
    pcfg.z = 8;
    pcfg.c1 = 4;
    pcfg.fc = 8;
    Predictor p = Predictor::make(pcfg);
    save_predictor(p, tmp.file("ip.lpck"));
    Predictor pback = load_predictor(tmp.file("ip.lpck"));
    CHECK(nn::state_hash(pback.net) == nn::state_hash(p.net));
    CHECK(pback.cfg.obs_size == 16);

    // Kind confusion is detected from the embedded config tensors.
    CHECK_THROWS_AS(load_predictor(tmp.file("plain.lpck")), ConfigError);
    CHECK_THROWS_AS(load_autoencoder(tmp.file("ip.lpck")), ConfigError);
    CHECK_THROWS_AS(load_autoencoder(tmp.file("missing.lpck")), FormatError);
}

}  // TEST_SUITE
