#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lumen/envmap.hpp"
#include "lumen/nn/adam.hpp"
#include "lumen/nn/layers.hpp"
#include "lumen/nn/network.hpp"
#include "lumen/render.hpp"

namespace lumen {

// ---------------------------------------------------------------------------
// Envmap autoencoder. The encoder/decoder operate on log1p-encoded radiance;
// linear-domain maps pass through envmap_batch / tensor_to_envmap.

struct AEConfig {
    int height = 32;  // envmap rows; power of two, width is always 2*height
    int width = 64;
    int z = 32;
    int enc_c1 = 32, enc_c2 = 64;
    int res_blocks = 4;
    int dec_seed_c = 64;  // channels of the fixed 4x8 decoder seed
    double lr = 1e-3;
    int batch = 8;
    int epochs = 40;
    std::uint64_t seed = 1;

    // Upsample stages from the 4x8 seed to height x width.
    int dec_stages() const;
    void validate() const;  // throws ConfigError
};

struct IPConfig {
    int obs_size = 128;  // square observation, 6 channels (rgb + normals)
    int z = 32;
    int c1 = 32;   // first conv width; doubles at each of the 4 stages
    int fc = 512;  // hidden fully-connected width
    double lr = 1e-3;
    int batch = 8;
    int epochs = 40;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

// ---------------------------------------------------------------------------
// Network builders, templated so gradient checks can run in double.

template <typename T>
nn::Network<T> build_encoder(const AEConfig &cfg) {
    using namespace nn;
    cfg.validate();
    Network<T> net;
    net.add(std::make_unique<Conv2d<T>>("enc.conv1", 3, cfg.enc_c1, 4, 2));
    net.add(std::make_unique<BatchNorm<T>>("enc.bn1", cfg.enc_c1));
    net.add(std::make_unique<Elu<T>>("enc.elu1"));
    net.add(std::make_unique<Conv2d<T>>("enc.conv2", cfg.enc_c1, cfg.enc_c2, 4, 2));
    net.add(std::make_unique<BatchNorm<T>>("enc.bn2", cfg.enc_c2));
    net.add(std::make_unique<Elu<T>>("enc.elu2"));
    for (int i = 0; i < cfg.res_blocks; ++i)
        net.add(std::make_unique<ResidualBlock<T>>("enc.res" + std::to_string(i + 1),
                                                   cfg.enc_c2));
    int flat = cfg.enc_c2 * (cfg.height / 4) * (cfg.width / 4);
    net.add(std::make_unique<Dense<T>>("enc.fc", flat, cfg.z));  // linear head
    return net;
}

template <typename T>
nn::Network<T> build_decoder(const AEConfig &cfg) {
    using namespace nn;
    cfg.validate();
    Network<T> net;
    int seed_n = cfg.dec_seed_c * 4 * 8;
    net.add(std::make_unique<Dense<T>>("dec.fc", cfg.z, seed_n));
    net.add(std::make_unique<Reshape<T>>("dec.reshape", std::vector<int>{cfg.dec_seed_c, 4, 8}));
    net.add(std::make_unique<BatchNorm<T>>("dec.bn0", cfg.dec_seed_c));
    net.add(std::make_unique<Elu<T>>("dec.elu0"));
    int stages = cfg.dec_stages();
    int in_c = cfg.dec_seed_c;
    for (int k = 1; k <= stages; ++k) {
        bool last = k == stages;
        int out_c = last ? 3 : cfg.dec_seed_c >> k;
        std::string tag = std::to_string(k);
        net.add(std::make_unique<UpsampleConv<T>>("dec.up" + tag, in_c, out_c));
        if (!last) {  // final stage is linear: log radiance may be negative
            net.add(std::make_unique<BatchNorm<T>>("dec.bn" + tag, out_c));
            net.add(std::make_unique<Elu<T>>("dec.elu" + tag));
        }
        in_c = out_c;
    }
    return net;
}

template <typename T>
nn::Network<T> build_predictor_net(const IPConfig &cfg) {
    using namespace nn;
    cfg.validate();
    Network<T> net;
    int in_c = 6, d = cfg.obs_size;
    for (int k = 1; k <= 4; ++k) {
        int out_c = cfg.c1 << (k - 1);
        std::string tag = std::to_string(k);
        net.add(std::make_unique<Conv2d<T>>("ip.conv" + tag, in_c, out_c, 4, 2));
        net.add(std::make_unique<BatchNorm<T>>("ip.bn" + tag, out_c));
        net.add(std::make_unique<Elu<T>>("ip.elu" + tag));
        in_c = out_c;
        d = (d - 1) / 2 + 1;
    }
    net.add(std::make_unique<Dense<T>>("ip.fc1", in_c * d * d, cfg.fc));
    net.add(std::make_unique<BatchNorm<T>>("ip.bn_fc", cfg.fc));
    net.add(std::make_unique<Elu<T>>("ip.elu_fc"));
    net.add(std::make_unique<Dense<T>>("ip.fc2", cfg.fc, cfg.z));  // linear head
    return net;
}

// ---------------------------------------------------------------------------

struct Autoencoder {
    AEConfig cfg;
    nn::Network<float> encoder, decoder;

    static Autoencoder make(const AEConfig &cfg);  // He-uniform init from cfg.seed
};

struct Predictor {
    IPConfig cfg;
    nn::Network<float> net;

    static Predictor make(const IPConfig &cfg);
};

// ---------------------------------------------------------------------------
// Tensor conversions. envmap_batch log1p-encodes; tensor_to_envmap applies
// expm1 and clamps at zero.

nn::Tensor<float> envmap_batch(const std::vector<EnvMap> &maps, const std::vector<int> &idx,
                               int height, int width);
EnvMap tensor_to_envmap(const nn::Tensor<float> &t, int n);
nn::Tensor<float> observation_batch(const std::vector<ObjectObservation> &obs,
                                    const std::vector<int> &idx, int size);

// ---------------------------------------------------------------------------
// Losses. Both return the batch-mean loss; when grad is non-null it receives
// dL/dpred.
//
// ae_loss: solid-angle-weighted mean absolute error in the log domain,
//   per map sum(w * |pred - target|) / (3 * sum(w)), averaged over the batch.
// ip_loss: mean Euclidean norm ||pred - target|| over the batch (the norm,
//   not its square).

template <typename T>
double ae_loss(const nn::Tensor<T> &pred, const nn::Tensor<T> &target, const SolidAngleMap &w,
               nn::Tensor<T> *grad = nullptr) {
    if (pred.shape != target.shape)
        throw std::invalid_argument("ae_loss: pred " + pred.shape_str() + " vs target " +
                                    target.shape_str());
    if (pred.rank() != 4 || pred.dim(1) != 3 || pred.dim(2) != w.height ||
        pred.dim(3) != w.width)
        throw std::invalid_argument("ae_loss: expected [N,3," + std::to_string(w.height) + "," +
                                    std::to_string(w.width) + "], got " + pred.shape_str());
    for (double wr : w.row)
        if (wr < 0.0) throw std::invalid_argument("ae_loss: negative solid-angle weight");
    const int n = pred.dim(0), h = pred.dim(2), wd = pred.dim(3);
    const double denom = 3.0 * w.total();
    if (grad) *grad = nn::Tensor<T>(pred.shape);
    double sum = 0.0;
    std::size_t idx = 0;
    for (int ni = 0; ni < n; ++ni) {
        double map_sum = 0.0;
        for (int ch = 0; ch < 3; ++ch)
            for (int r = 0; r < h; ++r) {
                const double wr = w.at(r);
                for (int c = 0; c < wd; ++c, ++idx) {
                    double d = static_cast<double>(pred.data[idx]) - target.data[idx];
                    map_sum += wr * std::abs(d);
                    if (grad)
                        grad->data[idx] = static_cast<T>(
                            wr * (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / (denom * n));
                }
            }
        sum += map_sum / denom;
    }
    return sum / n;
}

template <typename T>
double ip_loss(const nn::Tensor<T> &pred, const nn::Tensor<T> &target,
               nn::Tensor<T> *grad = nullptr) {
    if (pred.shape != target.shape || pred.rank() != 2)
        throw std::invalid_argument("ip_loss: pred " + pred.shape_str() + " vs target " +
                                    target.shape_str());
    const int n = pred.dim(0), z = pred.dim(1);
    if (grad) *grad = nn::Tensor<T>(pred.shape);
    double sum = 0.0;
    for (int ni = 0; ni < n; ++ni) {
        double sq = 0.0;
        for (int j = 0; j < z; ++j) {
            double d = static_cast<double>(pred.data[static_cast<std::size_t>(ni) * z + j]) -
                       target.data[static_cast<std::size_t>(ni) * z + j];
            sq += d * d;
        }
        double norm = std::sqrt(sq);
        sum += norm;
        if (grad && norm > 0.0)
            for (int j = 0; j < z; ++j) {
                std::size_t k = static_cast<std::size_t>(ni) * z + j;
                grad->data[k] = static_cast<T>(
                    (static_cast<double>(pred.data[k]) - target.data[k]) / (norm * n));
            }
    }
    return sum / n;
}

// ---------------------------------------------------------------------------
// Single-sample inference (eval mode throughout).

std::vector<float> encode_envmap(Autoencoder &ae, const EnvMap &e);
EnvMap decode_latent(Autoencoder &ae, const std::vector<float> &z);
EnvMap autoencode(Autoencoder &ae, const EnvMap &e);
std::vector<float> predict_latent(Predictor &p, const ObjectObservation &obs);
EnvMap predict_envmap(Predictor &p, Autoencoder &ae, const ObjectObservation &obs);

// ---------------------------------------------------------------------------
// Training. Each epoch appends one JSONL line
//   {"epoch":E,"train_loss":T,"val_loss":V,"seconds":S}
// to log_path (val_loss is null when no validation set is given). When a
// validation set is present the parameters giving the best val loss are
// restored at the end, unless save_optimizer is set (a resumable checkpoint
// must pair final weights with final moments).

struct TrainOptions {
    std::string log_path;
    std::string checkpoint_path;
    double stop_loss = 0.0;      // > 0: stop once epoch train loss <= this
    std::int64_t max_steps = 0;  // > 0: cap on optimizer steps
    bool save_optimizer = false;
};

struct TrainResult {
    int epochs_run = 0;
    std::int64_t steps = 0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;  // NaN when no validation set
    double best_val_loss = 0.0;   // ditto
};

TrainResult train_autoencoder(Autoencoder &ae, const std::vector<EnvMap> &train,
                              const std::vector<EnvMap> &val, const TrainOptions &opt = {});

// Latent targets come from the frozen encoder (eval mode); obs[i] must be the
// observation rendered under env[i]. The encoder state is hash-checked before
// and after: any drift is a StateError.
TrainResult train_predictor(Predictor &p, Autoencoder &ae,
                            const std::vector<ObjectObservation> &train_obs,
                            const std::vector<EnvMap> &train_env,
                            const std::vector<ObjectObservation> &val_obs,
                            const std::vector<EnvMap> &val_env, const TrainOptions &opt = {});

// ---------------------------------------------------------------------------
// Checkpoints (LPCK). Architecture configs ride along as meta tensors, so
// loading needs no external configuration; passing adam saves/restores
// moments for resumable training.

void save_autoencoder(Autoencoder &ae, const std::string &path,
                      nn::Adam<float> *adam = nullptr);
Autoencoder load_autoencoder(const std::string &path, nn::Adam<float> *adam = nullptr);
void save_predictor(Predictor &p, const std::string &path, nn::Adam<float> *adam = nullptr);
Predictor load_predictor(const std::string &path, nn::Adam<float> *adam = nullptr);

}  // namespace lumen
