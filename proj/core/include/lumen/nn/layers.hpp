#pragma once

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/nn/tensor.hpp"

namespace lumen::nn {

enum class Mode { train, eval };

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

template <typename T>
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    virtual Tensor<T> forward(const Tensor<T> &x, Mode mode) = 0;
    // Accumulates parameter gradients and returns the input gradient. Valid
    // only after a train-mode forward.
    virtual Tensor<T> backward(const Tensor<T> &gy) = 0;

    virtual void collect_params(std::vector<ParamSlot<T>> & /*out*/) {}
    virtual void collect_buffers(std::vector<NamedTensor<T>> & /*out*/) {}

    const std::string &name() const { return name_; }

protected:
    void require_cache(bool have) const {
        if (!have)
            throw StateError(name_ + ": backward before train-mode forward");
    }

    std::string name_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Dense : public Layer<T> {
public:
    Dense(std::string name, int in, int out)
        : Layer<T>(std::move(name)), in_(in), out_(out),
          w_({out, in}), b_({out}), gw_({out, in}), gb_({out}) {}

    Tensor<T> forward(const Tensor<T> &x, Mode) override {
        int n = x.dim(0);
        if (static_cast<int>(x.size()) != n * in_)
            throw std::invalid_argument(this->name_ + ": input " + x.shape_str() +
                                        " does not flatten to [" + std::to_string(n) + "," +
                                        std::to_string(in_) + "]");
        x_ = x;
        have_ = true;
        Tensor<T> y({n, out_});
        Eigen::Map<const MatRM<T>> X(x.data.data(), n, in_);
        Eigen::Map<const MatRM<T>> W(w_.data.data(), out_, in_);
        Eigen::Map<MatRM<T>> Y(y.data.data(), n, out_);
        Y.noalias() = X * W.transpose();
        Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> B(b_.data.data(), out_);
        Y.rowwise() += B.transpose();
        return y;
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        int n = x_.dim(0);
        Eigen::Map<const MatRM<T>> GY(gy.data.data(), n, out_);
        Eigen::Map<const MatRM<T>> X(x_.data.data(), n, in_);
        Eigen::Map<const MatRM<T>> W(w_.data.data(), out_, in_);
        Eigen::Map<MatRM<T>> GW(gw_.data.data(), out_, in_);
        Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> GB(gb_.data.data(), out_);
        GW.noalias() += GY.transpose() * X;
        GB.noalias() += GY.colwise().sum().transpose();
        Tensor<T> gx(x_.shape);
        Eigen::Map<MatRM<T>> GX(gx.data.data(), n, in_);
        GX.noalias() = GY * W;
        return gx;
    }

    void collect_params(std::vector<ParamSlot<T>> &out) override {
        out.push_back({this->name_ + ".w", &w_, &gw_});
        out.push_back({this->name_ + ".b", &b_, &gb_});
    }

    int in() const { return in_; }
    int out() const { return out_; }

private:
    int in_, out_;
    Tensor<T> w_, b_, gw_, gb_;
    Tensor<T> x_;
    bool have_ = false;
};

// ---------------------------------------------------------------------------
// Strided 2D convolution with zero padding chosen so the pre-stride spatial
// size is preserved ("same"): output is ceil(H/stride) x ceil(W/stride).

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(std::string name, int in_c, int out_c, int k, int stride)
        : Layer<T>(std::move(name)), ic_(in_c), oc_(out_c), k_(k), s_(stride),
          w_({out_c, in_c, k, k}), b_({out_c}), gw_({out_c, in_c, k, k}), gb_({out_c}) {
        if (k < 1 || stride < 1)
            throw std::invalid_argument(this->name_ + ": kernel and stride must be >= 1");
        pad_lo_ = (k - 1) / 2;
    }

    Tensor<T> forward(const Tensor<T> &x, Mode) override {
        check_input(x);
        x_ = x;
        have_ = true;
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int oh = out_dim(h), ow = out_dim(w);
        Tensor<T> y({n, oc_, oh, ow});
        const int patch = ic_ * k_ * k_;
        MatCM<T> cols(patch, oh * ow);
        Eigen::Map<const MatRM<T>> W(w_.data.data(), oc_, patch);
        for (int ni = 0; ni < n; ++ni) {
            im2col(x, ni, cols);
            Eigen::Map<MatRM<T>> Yn(y.data.data() + static_cast<std::size_t>(ni) * oc_ * oh * ow,
                                    oc_, oh * ow);
            Yn.noalias() = W * cols;
            for (int c = 0; c < oc_; ++c) Yn.row(c).array() += b_.data[c];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
        const int oh = out_dim(h), ow = out_dim(w);
        const int patch = ic_ * k_ * k_;
        Tensor<T> gx(x_.shape);
        MatCM<T> cols(patch, oh * ow);
        MatCM<T> gcols(patch, oh * ow);
        Eigen::Map<const MatRM<T>> W(w_.data.data(), oc_, patch);
        Eigen::Map<MatRM<T>> GW(gw_.data.data(), oc_, patch);
        for (int ni = 0; ni < n; ++ni) {
            Eigen::Map<const MatRM<T>> GYn(
                gy.data.data() + static_cast<std::size_t>(ni) * oc_ * oh * ow, oc_, oh * ow);
            im2col(x_, ni, cols);  // rebuilt rather than cached: trades FLOPs for memory
            GW.noalias() += GYn * cols.transpose();
            for (int c = 0; c < oc_; ++c) gb_.data[c] += GYn.row(c).sum();
            gcols.noalias() = W.transpose() * GYn;
            col2im_add(gcols, gx, ni);
        }
        return gx;
    }

    void collect_params(std::vector<ParamSlot<T>> &out) override {
        out.push_back({this->name_ + ".w", &w_, &gw_});
        out.push_back({this->name_ + ".b", &b_, &gb_});
    }

    int out_dim(int d) const { return (d - 1) / s_ + 1; }

private:
    void check_input(const Tensor<T> &x) const {
        if (x.rank() != 4 || x.dim(1) != ic_)
            throw std::invalid_argument(this->name_ + ": expected input [N," +
                                        std::to_string(ic_) + ",H,W], got " + x.shape_str());
    }

    // Column j = flattened patch for output position j (row-major over oh,ow).
    void im2col(const Tensor<T> &x, int ni, MatCM<T> &cols) const {
        const int h = x.dim(2), w = x.dim(3);
        const int oh = out_dim(h), ow = out_dim(w);
        const T *xp = x.data.data() + static_cast<std::size_t>(ni) * ic_ * h * w;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                T *col = cols.data() + static_cast<std::size_t>(oy * ow + ox) * ic_ * k_ * k_;
                int y0 = oy * s_ - pad_lo_, x0 = ox * s_ - pad_lo_;
                for (int c = 0; c < ic_; ++c) {
                    const T *xc = xp + static_cast<std::size_t>(c) * h * w;
                    for (int ky = 0; ky < k_; ++ky) {
                        int yy = y0 + ky;
                        for (int kx = 0; kx < k_; ++kx) {
                            int xx = x0 + kx;
                            *col++ = (yy >= 0 && yy < h && xx >= 0 && xx < w)
                                         ? xc[static_cast<std::size_t>(yy) * w + xx]
                                         : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im_add(const MatCM<T> &gcols, Tensor<T> &gx, int ni) const {
        const int h = gx.dim(2), w = gx.dim(3);
        const int oh = out_dim(h), ow = out_dim(w);
        T *gp = gx.data.data() + static_cast<std::size_t>(ni) * ic_ * h * w;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const T *col =
                    gcols.data() + static_cast<std::size_t>(oy * ow + ox) * ic_ * k_ * k_;
                int y0 = oy * s_ - pad_lo_, x0 = ox * s_ - pad_lo_;
                for (int c = 0; c < ic_; ++c) {
                    T *gc = gp + static_cast<std::size_t>(c) * h * w;
                    for (int ky = 0; ky < k_; ++ky) {
                        int yy = y0 + ky;
                        for (int kx = 0; kx < k_; ++kx) {
                            int xx = x0 + kx;
                            if (yy >= 0 && yy < h && xx >= 0 && xx < w)
                                gc[static_cast<std::size_t>(yy) * w + xx] += *col;
                            ++col;
                        }
                    }
                }
            }
        }
    }

    int ic_, oc_, k_, s_, pad_lo_;
    Tensor<T> w_, b_, gw_, gb_;
    Tensor<T> x_;
    bool have_ = false;
};

// ---------------------------------------------------------------------------

template <typename T>
class Elu : public Layer<T> {
public:
    explicit Elu(std::string name) : Layer<T>(std::move(name)) {}

    Tensor<T> forward(const Tensor<T> &x, Mode) override {
        y_ = Tensor<T>(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) {
            T v = x.data[i];
            y_.data[i] = v > T(0) ? v : std::expm1(v);
        }
        have_ = true;
        return y_;
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        Tensor<T> gx(y_.shape);
        // d/dx = 1 for x > 0, exp(x) = y + 1 otherwise (continuous at 0).
        for (std::size_t i = 0; i < gy.size(); ++i) {
            T y = y_.data[i];
            gx.data[i] = gy.data[i] * (y > T(0) ? T(1) : y + T(1));
        }
        return gx;
    }

private:
    Tensor<T> y_;
    bool have_ = false;
};

// ---------------------------------------------------------------------------
// Per-channel batch normalization over rank-2 [N,F] or rank-4 [N,C,H,W]
// input; biased variance, eps 1e-5, running-average momentum 0.9.

template <typename T>
class BatchNorm : public Layer<T> {
public:
    BatchNorm(std::string name, int channels)
        : Layer<T>(std::move(name)), c_(channels),
          gamma_({channels}), beta_({channels}), ggamma_({channels}), gbeta_({channels}),
          run_mean_({channels}), run_var_({channels}) {
        gamma_.fill(T(1));
        run_var_.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T> &x, Mode mode) override {
        if ((x.rank() != 2 && x.rank() != 4) || x.dim(1) != c_)
            throw std::invalid_argument(this->name_ + ": expected [N," + std::to_string(c_) +
                                        "(,H,W)], got " + x.shape_str());
        const std::size_t n = x.dim(0);
        const std::size_t sp = x.size() / (n * static_cast<std::size_t>(c_));
        const std::size_t m = n * sp;  // reduced elements per channel

        Tensor<T> y(x.shape);
        if (mode == Mode::train) {
            mean_.assign(c_, 0.0);
            var_.assign(c_, 0.0);
            for_each_channel(x, [&](int c, std::size_t idx) { mean_[c] += x.data[idx]; });
            for (int c = 0; c < c_; ++c) mean_[c] /= static_cast<double>(m);
            for_each_channel(x, [&](int c, std::size_t idx) {
                double d = static_cast<double>(x.data[idx]) - mean_[c];
                var_[c] += d * d;
            });
            for (int c = 0; c < c_; ++c) var_[c] /= static_cast<double>(m);
            inv_std_.resize(c_);
            for (int c = 0; c < c_; ++c) inv_std_[c] = 1.0 / std::sqrt(var_[c] + kEps);

            for (int c = 0; c < c_; ++c) {
                run_mean_.data[c] = static_cast<T>(kMomentum * run_mean_.data[c] +
                                                   (1.0 - kMomentum) * mean_[c]);
                run_var_.data[c] = static_cast<T>(kMomentum * run_var_.data[c] +
                                                  (1.0 - kMomentum) * var_[c]);
            }

            xhat_ = Tensor<T>(x.shape);
            for_each_channel(x, [&](int c, std::size_t idx) {
                double xh = (static_cast<double>(x.data[idx]) - mean_[c]) * inv_std_[c];
                xhat_.data[idx] = static_cast<T>(xh);
                y.data[idx] = static_cast<T>(xh * gamma_.data[c] + beta_.data[c]);
            });
            have_ = true;
        } else {
            for_each_channel(x, [&](int c, std::size_t idx) {
                double inv = 1.0 / std::sqrt(static_cast<double>(run_var_.data[c]) + kEps);
                double xh = (static_cast<double>(x.data[idx]) - run_mean_.data[c]) * inv;
                y.data[idx] = static_cast<T>(xh * gamma_.data[c] + beta_.data[c]);
            });
            have_ = false;  // backward through eval statistics is not supported
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        const std::size_t n = gy.dim(0);
        const std::size_t m = gy.size() / static_cast<std::size_t>(c_);
        (void)n;

        std::vector<double> sum_g(c_, 0.0), sum_gx(c_, 0.0);
        for_each_channel(gy, [&](int c, std::size_t idx) {
            double g = gy.data[idx] * static_cast<double>(gamma_.data[c]);
            sum_g[c] += g;
            sum_gx[c] += g * xhat_.data[idx];
            ggamma_.data[c] += static_cast<T>(gy.data[idx] * static_cast<double>(xhat_.data[idx]));
            gbeta_.data[c] += gy.data[idx];
        });

        Tensor<T> gx(gy.shape);
        double inv_m = 1.0 / static_cast<double>(m);
        for_each_channel(gy, [&](int c, std::size_t idx) {
            double g = gy.data[idx] * static_cast<double>(gamma_.data[c]);
            double v = inv_std_[c] *
                       (g - inv_m * sum_g[c] - static_cast<double>(xhat_.data[idx]) * inv_m * sum_gx[c]);
            gx.data[idx] = static_cast<T>(v);
        });
        return gx;
    }

    void collect_params(std::vector<ParamSlot<T>> &out) override {
        out.push_back({this->name_ + ".gamma", &gamma_, &ggamma_});
        out.push_back({this->name_ + ".beta", &beta_, &gbeta_});
    }

    void collect_buffers(std::vector<NamedTensor<T>> &out) override {
        out.push_back({this->name_ + ".running_mean", &run_mean_});
        out.push_back({this->name_ + ".running_var", &run_var_});
    }

    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.9;

private:
    // Invokes fn(channel, flat_index) over every element.
    template <typename F>
    void for_each_channel(const Tensor<T> &t, F &&fn) const {
        const std::size_t n = t.dim(0);
        const std::size_t sp = t.size() / (n * static_cast<std::size_t>(c_));
        std::size_t idx = 0;
        for (std::size_t ni = 0; ni < n; ++ni)
            for (int c = 0; c < c_; ++c)
                for (std::size_t s = 0; s < sp; ++s) fn(c, idx++);
    }

    int c_;
    Tensor<T> gamma_, beta_, ggamma_, gbeta_;
    Tensor<T> run_mean_, run_var_;
    std::vector<double> mean_, var_, inv_std_;
    Tensor<T> xhat_;
    bool have_ = false;
};

// ---------------------------------------------------------------------------
// Nearest-neighbor 2x resize followed by a same-size 3x3 convolution.

template <typename T>
class UpsampleConv : public Layer<T> {
public:
    UpsampleConv(std::string name, int in_c, int out_c)
        : Layer<T>(name), conv_(name + ".conv", in_c, out_c, 3, 1) {}

    Tensor<T> forward(const Tensor<T> &x, Mode mode) override {
        if (x.rank() != 4)
            throw std::invalid_argument(this->name_ + ": expected rank-4 input, got " +
                                        x.shape_str());
        in_shape_ = x.shape;
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        Tensor<T> up({n, c, 2 * h, 2 * w});
        for (int ni = 0; ni < n; ++ni)
            for (int ci = 0; ci < c; ++ci)
                for (int y = 0; y < 2 * h; ++y)
                    for (int xi = 0; xi < 2 * w; ++xi)
                        up.at4(ni, ci, y, xi) = x.at4(ni, ci, y / 2, xi / 2);
        have_ = true;
        return conv_.forward(up, mode);
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        Tensor<T> gup = conv_.backward(gy);
        Tensor<T> gx(in_shape_);
        const int n = gx.dim(0), c = gx.dim(1), h = gx.dim(2), w = gx.dim(3);
        for (int ni = 0; ni < n; ++ni)
            for (int ci = 0; ci < c; ++ci)
                for (int y = 0; y < 2 * h; ++y)
                    for (int xi = 0; xi < 2 * w; ++xi)
                        gx.at4(ni, ci, y / 2, xi / 2) += gup.at4(ni, ci, y, xi);
        return gx;
    }

    void collect_params(std::vector<ParamSlot<T>> &out) override { conv_.collect_params(out); }

private:
    Conv2d<T> conv_;
    std::vector<int> in_shape_;
    bool have_ = false;
};

// ---------------------------------------------------------------------------
// conv(3x3) - bn - elu - conv(3x3) - bn, plus identity, then elu.

template <typename T>
class ResidualBlock : public Layer<T> {
public:
    ResidualBlock(std::string name, int channels)
        : Layer<T>(name),
          conv1_(name + ".conv1", channels, channels, 3, 1),
          bn1_(name + ".bn1", channels),
          elu1_(name + ".elu1"),
          conv2_(name + ".conv2", channels, channels, 3, 1),
          bn2_(name + ".bn2", channels),
          elu_out_(name + ".elu_out") {}

    Tensor<T> forward(const Tensor<T> &x, Mode mode) override {
        Tensor<T> t = conv1_.forward(x, mode);
        t = bn1_.forward(t, mode);
        t = elu1_.forward(t, mode);
        t = conv2_.forward(t, mode);
        t = bn2_.forward(t, mode);
        for (std::size_t i = 0; i < t.size(); ++i) t.data[i] += x.data[i];
        have_ = true;
        return elu_out_.forward(t, mode);
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        Tensor<T> gs = elu_out_.backward(gy);
        Tensor<T> g = bn2_.backward(gs);
        g = conv2_.backward(g);
        g = elu1_.backward(g);
        g = bn1_.backward(g);
        g = conv1_.backward(g);
        for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += gs.data[i];  // identity path
        return g;
    }

    void collect_params(std::vector<ParamSlot<T>> &out) override {
        conv1_.collect_params(out);
        bn1_.collect_params(out);
        conv2_.collect_params(out);
        bn2_.collect_params(out);
    }

    void collect_buffers(std::vector<NamedTensor<T>> &out) override {
        bn1_.collect_buffers(out);
        bn2_.collect_buffers(out);
    }

private:
    Conv2d<T> conv1_;
    BatchNorm<T> bn1_;
    Elu<T> elu1_;
    Conv2d<T> conv2_;
    BatchNorm<T> bn2_;
    Elu<T> elu_out_;
    bool have_ = false;
};

// ---------------------------------------------------------------------------
// Reshapes [N, *] to [N, dims...]; pure bookkeeping.

template <typename T>
class Reshape : public Layer<T> {
public:
    Reshape(std::string name, std::vector<int> sample_shape)
        : Layer<T>(std::move(name)), sample_(std::move(sample_shape)) {}

    Tensor<T> forward(const Tensor<T> &x, Mode) override {
        std::size_t per = 1;
        for (int d : sample_) per *= static_cast<std::size_t>(d);
        if (x.size() != per * static_cast<std::size_t>(x.dim(0)))
            throw std::invalid_argument(this->name_ + ": cannot reshape " + x.shape_str());
        in_shape_ = x.shape;
        have_ = true;
        Tensor<T> y;
        y.shape = {x.dim(0)};
        y.shape.insert(y.shape.end(), sample_.begin(), sample_.end());
        y.data = x.data;
        return y;
    }

    Tensor<T> backward(const Tensor<T> &gy) override {
        this->require_cache(have_);
        Tensor<T> gx;
        gx.shape = in_shape_;
        gx.data = gy.data;
        return gx;
    }

private:
    std::vector<int> sample_;
    std::vector<int> in_shape_;
    bool have_ = false;
};

}  // namespace lumen::nn
