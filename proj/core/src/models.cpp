#include "lumen/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "lumen/nn/checkpoint.hpp"
#include "lumen/rng.hpp"

namespace lumen {

namespace {

constexpr const char *kAeMeta = "meta.ae_config";
constexpr const char *kIpMeta = "meta.ip_config";
constexpr const char *kAdamMeta = "meta.adam";

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------

int AEConfig::dec_stages() const {
    int s = 0;
    for (int h = 4; h < height; h *= 2) ++s;
    return s;
}

void AEConfig::validate() const {
    auto fail = [](const std::string &m) { throw ConfigError("AEConfig: " + m); };
    if (height < 8 || (height & (height - 1)) != 0)
        fail("height must be a power of two >= 8, got " + std::to_string(height));
    if (width != 2 * height) fail("width must equal 2 * height");
    if (z < 1) fail("z must be >= 1");
    if (enc_c1 < 1 || enc_c2 < 1 || dec_seed_c < 1) fail("channel counts must be >= 1");
    if (res_blocks < 0) fail("res_blocks must be >= 0");
    if (dec_seed_c >> (dec_stages() - 1) < 1)
        fail("dec_seed_c = " + std::to_string(dec_seed_c) + " leaves no channels after " +
             std::to_string(dec_stages()) + " upsample stages");
    if (!(lr > 0)) fail("lr must be positive");
    if (batch < 1) fail("batch must be >= 1");
    if (epochs < 1) fail("epochs must be >= 1");
}

void IPConfig::validate() const {
    auto fail = [](const std::string &m) { throw ConfigError("IPConfig: " + m); };
    if (obs_size < 16) fail("obs_size must be >= 16, got " + std::to_string(obs_size));
    if (z < 1) fail("z must be >= 1");
    if (c1 < 1 || fc < 1) fail("c1 and fc must be >= 1");
    if (!(lr > 0)) fail("lr must be positive");
    if (batch < 1) fail("batch must be >= 1");
    if (epochs < 1) fail("epochs must be >= 1");
}

Autoencoder Autoencoder::make(const AEConfig &cfg) {
    Autoencoder ae{cfg, build_encoder<float>(cfg), build_decoder<float>(cfg)};
    nn::init_params(ae.encoder, cfg.seed);
    nn::init_params(ae.decoder, cfg.seed);
    return ae;
}

Predictor Predictor::make(const IPConfig &cfg) {
    Predictor p{cfg, build_predictor_net<float>(cfg)};
    nn::init_params(p.net, cfg.seed);
    return p;
}

// ---------------------------------------------------------------------------

namespace {

void fill_log_sample(nn::Tensor<float> &t, int n, const EnvMap &e) {
    const int h = e.height, w = e.width;
    float *dst = t.data.data() + static_cast<std::size_t>(n) * 3 * h * w;
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) *dst++ = std::log1p(e.at(r, c, ch));
}

}  // namespace

nn::Tensor<float> envmap_batch(const std::vector<EnvMap> &maps, const std::vector<int> &idx,
                               int height, int width) {
    nn::Tensor<float> t({static_cast<int>(idx.size()), 3, height, width});
    for (std::size_t ni = 0; ni < idx.size(); ++ni) {
        if (idx[ni] < 0 || idx[ni] >= static_cast<int>(maps.size()))
            throw std::invalid_argument("envmap_batch: index out of range");
        const EnvMap &e = maps[static_cast<std::size_t>(idx[ni])];
        if (e.height != height || e.width != width)
            throw std::invalid_argument("envmap_batch: map " + std::to_string(e.height) + "x" +
                                        std::to_string(e.width) + ", expected " +
                                        std::to_string(height) + "x" + std::to_string(width));
        fill_log_sample(t, static_cast<int>(ni), e);
    }
    return t;
}

EnvMap tensor_to_envmap(const nn::Tensor<float> &t, int n) {
    if (t.rank() != 4 || t.dim(1) != 3)
        throw std::invalid_argument("tensor_to_envmap: expected [N,3,H,W], got " + t.shape_str());
    if (n < 0 || n >= t.dim(0)) throw std::invalid_argument("tensor_to_envmap: bad sample index");
    const int h = t.dim(2), w = t.dim(3);
    EnvMap e(h, w);
    const float *src = t.data.data() + static_cast<std::size_t>(n) * 3 * h * w;
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                float v = std::expm1(*src++);
                e.at(r, c, ch) = std::isfinite(v) && v > 0.0f ? v : 0.0f;
            }
    return e;
}

nn::Tensor<float> observation_batch(const std::vector<ObjectObservation> &obs,
                                    const std::vector<int> &idx, int size) {
    nn::Tensor<float> t({static_cast<int>(idx.size()), 6, size, size});
    for (std::size_t ni = 0; ni < idx.size(); ++ni) {
        if (idx[ni] < 0 || idx[ni] >= static_cast<int>(obs.size()))
            throw std::invalid_argument("observation_batch: index out of range");
        const ObjectObservation &o = obs[static_cast<std::size_t>(idx[ni])];
        if (o.rgb.height != size || o.rgb.width != size || o.nm.height != size ||
            o.nm.width != size)
            throw std::invalid_argument("observation_batch: observation " +
                                        std::to_string(o.rgb.height) + "x" +
                                        std::to_string(o.rgb.width) + ", expected " +
                                        std::to_string(size) + "x" + std::to_string(size));
        float *dst = t.data.data() + static_cast<std::size_t>(ni) * 6 * size * size;
        for (int ch = 0; ch < 3; ++ch)
            for (int r = 0; r < size; ++r)
                for (int c = 0; c < size; ++c) *dst++ = o.rgb.at(r, c, ch);
        // Normals in the same (n + 1) / 2 encoding as normal_map_to_image;
        // background pixels sit at the midpoint 0.5.
        for (int ch = 0; ch < 3; ++ch)
            for (int r = 0; r < size; ++r)
                for (int c = 0; c < size; ++c) {
                    std::size_t pix = static_cast<std::size_t>(r) * size + c;
                    *dst++ = o.nm.mask[pix]
                                 ? 0.5f * (o.nm.n[pix * 3 + static_cast<std::size_t>(ch)] + 1.0f)
                                 : 0.5f;
                }
    }
    return t;
}

// ---------------------------------------------------------------------------

std::vector<float> encode_envmap(Autoencoder &ae, const EnvMap &e) {
    validate_envmap(e, "encode_envmap");
    if (e.height != ae.cfg.height || e.width != ae.cfg.width)
        throw std::invalid_argument("encode_envmap: map is " + std::to_string(e.height) + "x" +
                          std::to_string(e.width) + " but the model expects " +
                          std::to_string(ae.cfg.height) + "x" + std::to_string(ae.cfg.width));
    nn::Tensor<float> x({1, 3, e.height, e.width});
    fill_log_sample(x, 0, e);
    nn::Tensor<float> zc = ae.encoder.forward(x, nn::Mode::eval);
    return zc.data;
}

EnvMap decode_latent(Autoencoder &ae, const std::vector<float> &z) {
    if (static_cast<int>(z.size()) != ae.cfg.z)
        throw std::invalid_argument("decode_latent: latent has " + std::to_string(z.size()) +
                          " components but the model expects " + std::to_string(ae.cfg.z));
    nn::Tensor<float> zt({1, ae.cfg.z});
    zt.data = z;
    nn::Tensor<float> y = ae.decoder.forward(zt, nn::Mode::eval);
    return tensor_to_envmap(y, 0);
}

EnvMap autoencode(Autoencoder &ae, const EnvMap &e) { return decode_latent(ae, encode_envmap(ae, e)); }

std::vector<float> predict_latent(Predictor &p, const ObjectObservation &obs) {
    const int s = p.cfg.obs_size;
    if (obs.rgb.height != s || obs.rgb.width != s || obs.nm.height != s || obs.nm.width != s)
        throw std::invalid_argument("predict_latent: observation is " + std::to_string(obs.rgb.height) +
                          "x" + std::to_string(obs.rgb.width) + " but the model expects " +
                          std::to_string(s) + "x" + std::to_string(s));
    nn::Tensor<float> x = observation_batch({obs}, {0}, s);
    nn::Tensor<float> zc = p.net.forward(x, nn::Mode::eval);
    return zc.data;
}

EnvMap predict_envmap(Predictor &p, Autoencoder &ae, const ObjectObservation &obs) {
    if (p.cfg.z != ae.cfg.z)
        throw ConfigError("predict_envmap: predictor z = " + std::to_string(p.cfg.z) +
                          " does not match autoencoder z = " + std::to_string(ae.cfg.z));
    return decode_latent(ae, predict_latent(p, obs));
}

// ---------------------------------------------------------------------------

namespace {

class LogWriter {
public:
    explicit LogWriter(const std::string &path) {
        if (path.empty()) return;
        out_.open(path, std::ios::trunc);
        if (!out_) throw ResourceError("cannot open training log " + path);
    }

    void line(int epoch, double train, bool has_val, double val, double secs) {
        if (!out_.is_open()) return;
        char buf[160];
        if (has_val)
            std::snprintf(buf, sizeof buf,
                          "{\"epoch\":%d,\"train_loss\":%.9g,\"val_loss\":%.9g,\"seconds\":%.3f}",
                          epoch, train, val, secs);
        else
            std::snprintf(buf, sizeof buf,
                          "{\"epoch\":%d,\"train_loss\":%.9g,\"val_loss\":null,\"seconds\":%.3f}",
                          epoch, train, secs);
        out_ << buf << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

std::vector<std::vector<int>> make_batches(int n, int batch, Rng &order_rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; i += batch) {
        int hi = std::min(n, i + batch);
        out.emplace_back(order.begin() + i, order.begin() + hi);
    }
    return out;
}

std::vector<int> range_batch(std::size_t i0, std::size_t i1) {
    std::vector<int> idx;
    idx.reserve(i1 - i0);
    for (std::size_t i = i0; i < i1; ++i) idx.push_back(static_cast<int>(i));
    return idx;
}

struct Snapshot {
    std::vector<nn::Tensor<float>> params, buffers;
};

Snapshot take_snapshot(const std::vector<nn::ParamSlot<float>> &ps,
                       const std::vector<nn::NamedTensor<float>> &bs) {
    Snapshot s;
    for (const auto &p : ps) s.params.push_back(*p.value);
    for (const auto &b : bs) s.buffers.push_back(*b.tensor);
    return s;
}

void restore_snapshot(const Snapshot &s, const std::vector<nn::ParamSlot<float>> &ps,
                      const std::vector<nn::NamedTensor<float>> &bs) {
    for (std::size_t i = 0; i < ps.size(); ++i) *ps[i].value = s.params[i];
    for (std::size_t i = 0; i < bs.size(); ++i) *bs[i].tensor = s.buffers[i];
}

void check_envmaps(const std::vector<EnvMap> &maps, int h, int w, const char *which) {
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const EnvMap &e = maps[i];
        validate_envmap(e, which);
        if (e.height != h || e.width != w)
            throw DatasetError(std::string(which) + ": map " + std::to_string(i) + " is " +
                               std::to_string(e.height) + "x" + std::to_string(e.width) +
                               ", expected " + std::to_string(h) + "x" + std::to_string(w));
    }
}

void check_observations(const std::vector<ObjectObservation> &obs, int s, const char *which) {
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const ObjectObservation &o = obs[i];
        if (o.rgb.height != s || o.rgb.width != s || o.nm.height != s || o.nm.width != s)
            throw DatasetError(std::string(which) + ": observation " + std::to_string(i) +
                               " is " + std::to_string(o.rgb.height) + "x" +
                               std::to_string(o.rgb.width) + ", expected " + std::to_string(s) +
                               "x" + std::to_string(s));
    }
}

}  // namespace

TrainResult train_autoencoder(Autoencoder &ae, const std::vector<EnvMap> &train,
                              const std::vector<EnvMap> &val, const TrainOptions &opt) {
    ae.cfg.validate();
    if (train.empty()) throw DatasetError("train_autoencoder: empty training set");
    const int h = ae.cfg.height, w = ae.cfg.width;
    check_envmaps(train, h, w, "train_autoencoder");
    check_envmaps(val, h, w, "train_autoencoder");

    SolidAngleMap sw = solid_angle_weights(h, w);
    nn::Adam<float> adam(ae.cfg.lr);
    LogWriter log(opt.log_path);
    Rng order_rng(mix_seed(ae.cfg.seed, fnv1a64("batch_order")));

    auto all_params = [&] {
        auto ps = ae.encoder.params();
        auto pd = ae.decoder.params();
        ps.insert(ps.end(), pd.begin(), pd.end());
        return ps;
    };
    auto all_buffers = [&] {
        auto bs = ae.encoder.buffers();
        auto bd = ae.decoder.buffers();
        bs.insert(bs.end(), bd.begin(), bd.end());
        return bs;
    };
    auto eval_pass = [&](const std::vector<EnvMap> &set) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i0 = 0; i0 < set.size(); i0 += static_cast<std::size_t>(ae.cfg.batch)) {
            auto idx = range_batch(i0, std::min(set.size(), i0 + ae.cfg.batch));
            auto x = envmap_batch(set, idx, h, w);
            auto y = ae.decoder.forward(ae.encoder.forward(x, nn::Mode::eval), nn::Mode::eval);
            sum += ae_loss(y, x, sw) * static_cast<double>(idx.size());
            cnt += idx.size();
        }
        return sum / static_cast<double>(cnt);
    };

    TrainResult res;
    res.final_val_loss = std::numeric_limits<double>::quiet_NaN();
    res.best_val_loss = res.final_val_loss;
    Snapshot best;
    bool have_best = false, out_of_steps = false;

    for (int epoch = 1; epoch <= ae.cfg.epochs && !out_of_steps; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const auto &bidx : make_batches(static_cast<int>(train.size()), ae.cfg.batch,
                                             order_rng)) {
            auto x = envmap_batch(train, bidx, h, w);
            auto y = ae.decoder.forward(ae.encoder.forward(x, nn::Mode::train), nn::Mode::train);
            nn::Tensor<float> g;
            sum += ae_loss(y, x, sw, &g) * static_cast<double>(bidx.size());
            cnt += bidx.size();
            ae.encoder.zero_grads();
            ae.decoder.zero_grads();
            ae.encoder.backward(ae.decoder.backward(g));
            auto ps = all_params();
            adam.step(ps);
            if (opt.max_steps > 0 && adam.steps() >= opt.max_steps) {
                out_of_steps = true;
                break;
            }
        }
        res.epochs_run = epoch;
        res.final_train_loss = sum / static_cast<double>(cnt);
        const bool has_val = !val.empty();
        if (has_val) {
            res.final_val_loss = eval_pass(val);
            if (!have_best || res.final_val_loss < res.best_val_loss) {
                res.best_val_loss = res.final_val_loss;
                best = take_snapshot(all_params(), all_buffers());
                have_best = true;
            }
        }
        log.line(epoch, res.final_train_loss, has_val, res.final_val_loss, seconds_since(t0));
        if (opt.stop_loss > 0 && res.final_train_loss <= opt.stop_loss) break;
    }
    res.steps = adam.steps();
    if (have_best && !opt.save_optimizer) restore_snapshot(best, all_params(), all_buffers());
    if (!opt.checkpoint_path.empty())
        save_autoencoder(ae, opt.checkpoint_path, opt.save_optimizer ? &adam : nullptr);
    return res;
}

TrainResult train_predictor(Predictor &p, Autoencoder &ae,
                            const std::vector<ObjectObservation> &train_obs,
                            const std::vector<EnvMap> &train_env,
                            const std::vector<ObjectObservation> &val_obs,
                            const std::vector<EnvMap> &val_env, const TrainOptions &opt) {
    p.cfg.validate();
    ae.cfg.validate();
    if (p.cfg.z != ae.cfg.z)
        throw ConfigError("train_predictor: predictor z = " + std::to_string(p.cfg.z) +
                          " does not match autoencoder z = " + std::to_string(ae.cfg.z));
    if (train_obs.size() != train_env.size() || val_obs.size() != val_env.size())
        throw DatasetError("train_predictor: observation/envmap counts differ");
    if (train_obs.empty()) throw DatasetError("train_predictor: empty training set");
    check_envmaps(train_env, ae.cfg.height, ae.cfg.width, "train_predictor");
    check_envmaps(val_env, ae.cfg.height, ae.cfg.width, "train_predictor");
    check_observations(train_obs, p.cfg.obs_size, "train_predictor");
    check_observations(val_obs, p.cfg.obs_size, "train_predictor");

    const std::uint64_t frozen = nn::state_hash(ae.encoder);
    auto encode_targets = [&](const std::vector<EnvMap> &env) {
        nn::Tensor<float> zt({std::max(1, static_cast<int>(env.size())), p.cfg.z});
        for (std::size_t i0 = 0; i0 < env.size(); i0 += static_cast<std::size_t>(p.cfg.batch)) {
            auto idx = range_batch(i0, std::min(env.size(), i0 + p.cfg.batch));
            auto x = envmap_batch(env, idx, ae.cfg.height, ae.cfg.width);
            auto zc = ae.encoder.forward(x, nn::Mode::eval);
            std::memcpy(zt.data.data() + i0 * static_cast<std::size_t>(p.cfg.z), zc.data.data(),
                        zc.size() * sizeof(float));
        }
        return zt;
    };
    nn::Tensor<float> z_train = encode_targets(train_env);
    nn::Tensor<float> z_val = encode_targets(val_env);

    auto gather_rows = [&](const nn::Tensor<float> &src, const std::vector<int> &idx) {
        nn::Tensor<float> out({static_cast<int>(idx.size()), p.cfg.z});
        for (std::size_t i = 0; i < idx.size(); ++i)
            std::memcpy(out.data.data() + i * static_cast<std::size_t>(p.cfg.z),
                        src.data.data() + static_cast<std::size_t>(idx[i]) * p.cfg.z,
                        static_cast<std::size_t>(p.cfg.z) * sizeof(float));
        return out;
    };

    nn::Adam<float> adam(p.cfg.lr);
    LogWriter log(opt.log_path);
    Rng order_rng(mix_seed(p.cfg.seed, fnv1a64("batch_order")));

    auto eval_pass = [&] {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i0 = 0; i0 < val_obs.size(); i0 += static_cast<std::size_t>(p.cfg.batch)) {
            auto idx = range_batch(i0, std::min(val_obs.size(), i0 + p.cfg.batch));
            auto x = observation_batch(val_obs, idx, p.cfg.obs_size);
            auto pred = p.net.forward(x, nn::Mode::eval);
            sum += ip_loss(pred, gather_rows(z_val, idx)) * static_cast<double>(idx.size());
            cnt += idx.size();
        }
        return sum / static_cast<double>(cnt);
    };

    TrainResult res;
    res.final_val_loss = std::numeric_limits<double>::quiet_NaN();
    res.best_val_loss = res.final_val_loss;
    Snapshot best;
    bool have_best = false, out_of_steps = false;

    for (int epoch = 1; epoch <= p.cfg.epochs && !out_of_steps; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const auto &bidx : make_batches(static_cast<int>(train_obs.size()), p.cfg.batch,
                                             order_rng)) {
            auto x = observation_batch(train_obs, bidx, p.cfg.obs_size);
            auto pred = p.net.forward(x, nn::Mode::train);
            nn::Tensor<float> g;
            sum += ip_loss(pred, gather_rows(z_train, bidx), &g) * static_cast<double>(bidx.size());
            cnt += bidx.size();
            p.net.zero_grads();
            p.net.backward(g);
            auto ps = p.net.params();
            adam.step(ps);
            if (opt.max_steps > 0 && adam.steps() >= opt.max_steps) {
                out_of_steps = true;
                break;
            }
        }
        res.epochs_run = epoch;
        res.final_train_loss = sum / static_cast<double>(cnt);
        const bool has_val = !val_obs.empty();
        if (has_val) {
            res.final_val_loss = eval_pass();
            if (!have_best || res.final_val_loss < res.best_val_loss) {
                res.best_val_loss = res.final_val_loss;
                best = take_snapshot(p.net.params(), p.net.buffers());
                have_best = true;
            }
        }
        log.line(epoch, res.final_train_loss, has_val, res.final_val_loss, seconds_since(t0));
        if (opt.stop_loss > 0 && res.final_train_loss <= opt.stop_loss) break;
    }
    res.steps = adam.steps();
    if (have_best && !opt.save_optimizer)
        restore_snapshot(best, p.net.params(), p.net.buffers());

    if (nn::state_hash(ae.encoder) != frozen)
        throw StateError("train_predictor: frozen encoder state changed during training");
    if (!opt.checkpoint_path.empty())
        save_predictor(p, opt.checkpoint_path, opt.save_optimizer ? &adam : nullptr);
    return res;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> ae_meta(const AEConfig &c) {
    return {static_cast<double>(c.height),     static_cast<double>(c.width),
            static_cast<double>(c.z),          static_cast<double>(c.enc_c1),
            static_cast<double>(c.enc_c2),     static_cast<double>(c.res_blocks),
            static_cast<double>(c.dec_seed_c)};
}

AEConfig ae_from_meta(const std::vector<double> &v) {
    if (v.size() != 7) throw ConfigError("checkpoint: ae_config metadata has wrong length");
    AEConfig c;
    c.height = static_cast<int>(v[0]);
    c.width = static_cast<int>(v[1]);
    c.z = static_cast<int>(v[2]);
    c.enc_c1 = static_cast<int>(v[3]);
    c.enc_c2 = static_cast<int>(v[4]);
    c.res_blocks = static_cast<int>(v[5]);
    c.dec_seed_c = static_cast<int>(v[6]);
    c.validate();
    return c;
}

std::vector<double> ip_meta(const IPConfig &c) {
    return {static_cast<double>(c.obs_size), static_cast<double>(c.z),
            static_cast<double>(c.c1), static_cast<double>(c.fc)};
}

IPConfig ip_from_meta(const std::vector<double> &v) {
    if (v.size() != 4) throw ConfigError("checkpoint: ip_config metadata has wrong length");
    IPConfig c;
    c.obs_size = static_cast<int>(v[0]);
    c.z = static_cast<int>(v[1]);
    c.c1 = static_cast<int>(v[2]);
    c.fc = static_cast<int>(v[3]);
    c.validate();
    return c;
}

void pack_network(nn::Network<float> &net, std::vector<nn::RawTensor> &out) {
    for (const auto &p : net.params()) out.push_back(nn::pack_tensor(p.name, *p.value));
    for (const auto &b : net.buffers()) out.push_back(nn::pack_tensor(b.name, *b.tensor));
}

using TensorIndex = std::map<std::string, const nn::RawTensor *>;

TensorIndex index_tensors(const std::vector<nn::RawTensor> &ts) {
    TensorIndex by_name;
    for (const auto &t : ts) by_name[t.name] = &t;
    return by_name;
}

void unpack_network(nn::Network<float> &net, const TensorIndex &by_name) {
    auto fetch = [&](const std::string &name, nn::Tensor<float> &dst) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ConfigError("checkpoint missing tensor '" + name + "'");
        nn::unpack_tensor(*it->second, dst);
    };
    for (const auto &p : net.params()) fetch(p.name, *p.value);
    for (const auto &b : net.buffers()) fetch(b.name, *b.tensor);
}

void pack_adam(nn::Adam<float> &adam, nn::Checkpoint &ck) {
    ck.has_optimizer = true;
    ck.optimizer.push_back(
        nn::pack_doubles(kAdamMeta, {static_cast<double>(adam.steps()), adam.lr()}));
    for (const auto &[name, st] : adam.state()) {
        if (st.m.empty()) continue;
        for (const char *which : {"m", "v"}) {
            const std::vector<float> &src = which[0] == 'm' ? st.m : st.v;
            nn::RawTensor r;
            r.name = std::string(which) + "." + name;
            r.dtype = 0;
            r.shape = {static_cast<int>(src.size())};
            r.payload.resize(src.size() * sizeof(float));
            std::memcpy(r.payload.data(), src.data(), r.payload.size());
            ck.optimizer.push_back(std::move(r));
        }
    }
}

void unpack_adam(const nn::Checkpoint &ck, nn::Adam<float> &adam) {
    if (!ck.has_optimizer)
        throw ConfigError("checkpoint carries no optimizer state");
    TensorIndex by_name = index_tensors(ck.optimizer);
    auto it = by_name.find(kAdamMeta);
    if (it == by_name.end()) throw ConfigError("checkpoint optimizer section lacks meta.adam");
    std::vector<double> meta = nn::unpack_doubles(*it->second);
    if (meta.size() != 2) throw ConfigError("checkpoint: meta.adam has wrong length");
    adam.set_steps(static_cast<std::int64_t>(meta[0]));
    adam.set_lr(meta[1]);
    for (const auto &[name, raw] : by_name) {
        if (name.size() < 3 || name[1] != '.' || (name[0] != 'm' && name[0] != 'v')) continue;
        if (raw->dtype != 0)
            throw ConfigError("checkpoint optimizer tensor '" + name + "' is not f32");
        auto &st = adam.state()[name.substr(2)];
        std::vector<float> buf(raw->count());
        std::memcpy(buf.data(), raw->payload.data(), raw->payload.size());
        (name[0] == 'm' ? st.m : st.v) = std::move(buf);
    }
}

}  // namespace

void save_autoencoder(Autoencoder &ae, const std::string &path, nn::Adam<float> *adam) {
    nn::Checkpoint ck;
    ck.tensors.push_back(nn::pack_doubles(kAeMeta, ae_meta(ae.cfg)));
    pack_network(ae.encoder, ck.tensors);
    pack_network(ae.decoder, ck.tensors);
    if (adam) pack_adam(*adam, ck);
    nn::write_checkpoint(ck, path);
}

Autoencoder load_autoencoder(const std::string &path, nn::Adam<float> *adam) {
    nn::Checkpoint ck = nn::read_checkpoint(path);
    TensorIndex by_name = index_tensors(ck.tensors);
    auto it = by_name.find(kAeMeta);
    if (it == by_name.end())
        throw ConfigError(path + " is not an autoencoder checkpoint (no " + kAeMeta + ")");
    AEConfig cfg = ae_from_meta(nn::unpack_doubles(*it->second));
    Autoencoder ae{cfg, build_encoder<float>(cfg), build_decoder<float>(cfg)};
    unpack_network(ae.encoder, by_name);
    unpack_network(ae.decoder, by_name);
    if (adam) unpack_adam(ck, *adam);
    return ae;
}

void save_predictor(Predictor &p, const std::string &path, nn::Adam<float> *adam) {
    nn::Checkpoint ck;
    ck.tensors.push_back(nn::pack_doubles(kIpMeta, ip_meta(p.cfg)));
    pack_network(p.net, ck.tensors);
    if (adam) pack_adam(*adam, ck);
    nn::write_checkpoint(ck, path);
}

Predictor load_predictor(const std::string &path, nn::Adam<float> *adam) {
    nn::Checkpoint ck = nn::read_checkpoint(path);
    TensorIndex by_name = index_tensors(ck.tensors);
    auto it = by_name.find(kIpMeta);
    if (it == by_name.end())
        throw ConfigError(path + " is not a predictor checkpoint (no " + kIpMeta + ")");
    IPConfig cfg = ip_from_meta(nn::unpack_doubles(*it->second));
    Predictor p{cfg, build_predictor_net<float>(cfg)};
    unpack_network(p.net, by_name);
    if (adam) unpack_adam(ck, *adam);
    return p;
}

}  // namespace lumen
