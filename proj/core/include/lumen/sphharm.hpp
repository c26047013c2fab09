#pragma once

#include <string>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/envmap.hpp"
#include "lumen/image.hpp"

namespace lumen {

// Real orthonormal spherical harmonics, flat index k = l(l+1) + m for band
// l in [0, L], order m in [-l, l]. Only orthonormality is contractual; the
// sign convention (Condon–Shortley absorbed into the recurrence) is internal.

struct SHCoeffs {
    int degree = 0;
    // k-major, channel-minor: value for (k, ch) at c[k * 3 + ch]. Matches the
    // text serialization order.
    std::vector<double> c;

    SHCoeffs() = default;
    explicit SHCoeffs(int degree_);

    double &at(int k, int ch) { return c[static_cast<std::size_t>(k) * 3 + ch]; }
    double at(int k, int ch) const { return c[static_cast<std::size_t>(k) * 3 + ch]; }
};

// (L+1)^2; negative degree rejected.
int num_coeffs(int degree);

// All (L+1)^2 basis values at unit direction d. Associated Legendre
// recurrence, Y_0 = 1/(2 sqrt(pi)).
std::vector<double> eval_sh_basis(const Vec3 &d, int degree);
void eval_sh_basis(const Vec3 &d, int degree, double *out);

// Solid-angle quadrature projection of an arbitrary (possibly signed) image
// on the equirectangular sphere grid. The EnvMap overload validates envmap
// invariants first; the image overload is the raw core, needed to re-project
// unclamped reconstructions.
SHCoeffs project_image(const Image3 &img, int degree);
SHCoeffs project(const EnvMap &e, int degree);

// Pointwise synthesis sum_k c_k Y_k; raw output may be negative.
Image3 reconstruct(const SHCoeffs &c, int height, int width);
// Same, clipped at 0 so the result is a valid EnvMap.
EnvMap reconstruct_clamped(const SHCoeffs &c, int height, int width);

// Band l scaled by sinc(pi l / (2 (L+1))); band 0 unchanged. Applying twice
// squares the window (not idempotent).
SHCoeffs windowed_lowpass(const SHCoeffs &c);

// Text form: first line "SH <L> <channels>", then one coefficient per line,
// k-major channel-minor.
void write_sh(const SHCoeffs &c, const std::string &path);
SHCoeffs read_sh(const std::string &path);

}  // namespace lumen
