#include "lumen/metrics.hpp"

#include <cmath>

namespace lumen {

namespace {

void check_inputs(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w,
                  const char *where) {
    require_same_shape(e_hat, e, where);
    if (w.height != e.height || w.width != e.width)
        throw std::invalid_argument(std::string(where) + ": weight map shape mismatch");
    for (double v : w.row)
        if (v < 0.0) throw std::invalid_argument(std::string(where) + ": negative weights");
}

double weight_total(const SolidAngleMap &w) {
    double s = 0;
    for (double v : w.row) s += v;
    return s * w.width;
}

}  // namespace

double rmse(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w) {
    check_inputs(e_hat, e, w, "rmse");
    double acc = 0;
    for (int r = 0; r < e.height; ++r) {
        double wr = w.at(r);
        for (int c = 0; c < e.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                double d = static_cast<double>(e_hat.at(r, c, ch)) - e.at(r, c, ch);
                acc += wr * d * d;
            }
    }
    return std::sqrt(acc / (3.0 * weight_total(w)));
}

SiRmseResult si_rmse(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w) {
    check_inputs(e_hat, e, w, "si_rmse");
    double num = 0, den = 0;
    for (int r = 0; r < e.height; ++r) {
        double wr = w.at(r);
        for (int c = 0; c < e.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                double p = e_hat.at(r, c, ch);
                num += wr * static_cast<double>(e.at(r, c, ch)) * p;
                den += wr * p * p;
            }
    }
    SiRmseResult res;
    res.alpha = den < 1e-12 ? 0.0 : num / den;

    double acc = 0;
    for (int r = 0; r < e.height; ++r) {
        double wr = w.at(r);
        for (int c = 0; c < e.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                double d = res.alpha * e_hat.at(r, c, ch) - e.at(r, c, ch);
                acc += wr * d * d;
            }
    }
    res.value = std::sqrt(acc / (3.0 * weight_total(w)));
    return res;
}

double mae(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w) {
    check_inputs(e_hat, e, w, "mae");
    double acc = 0;
    for (int r = 0; r < e.height; ++r) {
        double wr = w.at(r);
        for (int c = 0; c < e.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                acc += wr * std::abs(static_cast<double>(e_hat.at(r, c, ch)) - e.at(r, c, ch));
    }
    return acc / (3.0 * weight_total(w));
}

double mre(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w) {
    check_inputs(e_hat, e, w, "mre");
    constexpr double eps = 1e-3;
    double acc = 0;
    for (int r = 0; r < e.height; ++r) {
        double wr = w.at(r);
        for (int c = 0; c < e.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                double d = std::abs(static_cast<double>(e_hat.at(r, c, ch)) - e.at(r, c, ch));
                acc += wr * d / (e.at(r, c, ch) + eps);
            }
    }
    return acc / (3.0 * weight_total(w));
}

double relight_error(const EnvMap &e_hat, const EnvMap &e, const NormalMap &nm,
                     const Brdf &brdf) {
    require_same_shape(e_hat, e, "relight_error");
    Image3 a = render_direct(nm, brdf, e_hat);
    Image3 b = render_direct(nm, brdf, e);
    double acc = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < nm.mask.size(); ++i) {
        if (!nm.mask[i]) continue;
        ++count;
        for (int ch = 0; ch < 3; ++ch) {
            double d = static_cast<double>(a.data[3 * i + ch]) - b.data[3 * i + ch];
            acc += d * d;
        }
    }
    if (count == 0) throw std::invalid_argument("relight_error: empty mask");
    return std::sqrt(acc / (3.0 * static_cast<double>(count)));
}

}  // namespace lumen
