#pragma once

#include "lumen/envmap.hpp"
#include "lumen/image.hpp"
#include "lumen/render.hpp"

namespace lumen {

// Solid-angle-weighted envmap metrics. `w` broadcasts across channels;
// predictions are expected clamped at 0 by the caller.

// sqrt( sum w (e_hat - e)^2 / (3 sum w) )
double rmse(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w);

struct SiRmseResult {
    double value = 0.0;
    double alpha = 0.0;  // single scale across channels
};

// rmse(alpha* e_hat, e) with alpha* = sum(w e e_hat) / sum(w e_hat^2);
// alpha = 0 when the denominator underflows (below 1e-12).
SiRmseResult si_rmse(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w);

// sum w |e_hat - e| / (3 sum w)
double mae(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w);

// sum w |e_hat - e| / (e + eps) / (3 sum w), eps = 1e-3 guarding zeros.
double mre(const Image3 &e_hat, const Image3 &e, const SolidAngleMap &w);

// RMS difference of render_direct under both lightings, uniform weights over
// masked pixels.
double relight_error(const EnvMap &e_hat, const EnvMap &e, const NormalMap &nm,
                     const Brdf &brdf);

}  // namespace lumen
