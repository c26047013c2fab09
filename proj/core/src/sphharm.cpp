#include "lumen/sphharm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace lumen {

SHCoeffs::SHCoeffs(int degree_) : degree(degree_) {
    c.assign(static_cast<std::size_t>(num_coeffs(degree_)) * 3, 0.0);
}

int num_coeffs(int degree) {
    if (degree < 0)
        throw std::invalid_argument("num_coeffs: degree must be nonnegative, got " +
                                    std::to_string(degree));
    return (degree + 1) * (degree + 1);
}

namespace {

// Normalization sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!), m >= 0. The factorial
// ratio is built as a running product to stay in range for any practical l.
double sh_norm(int l, int m) {
    double ratio = 1.0;
    for (int i = l - m + 1; i <= l + m; ++i) ratio /= i;
    return std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
}

}  // namespace

void eval_sh_basis(const Vec3 &d, int degree, double *out) {
    if (std::abs(d.dot(d) - 1.0) > 1e-9)
        throw std::invalid_argument("eval_sh_basis: direction is not unit length");
    if (degree < 0)
        throw std::invalid_argument("eval_sh_basis: degree must be nonnegative");

    const int L = degree;
    double ct = d.z;                              // cos(theta)
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));  // sin(theta) >= 0
    double phi = std::atan2(d.y, d.x);

    // For each m, walk the Legendre recurrence upward in l:
    //   P_m^m     = (-1)^m (2m-1)!! (sin theta)^m
    //   P_{m+1}^m = ct (2m+1) P_m^m
    //   P_l^m     = ((2l-1) ct P_{l-1}^m - (l+m-1) P_{l-2}^m) / (l - m)
    for (int m = 0; m <= L; ++m) {
        double pmm = 1.0;
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= -fact * st;
            fact += 2.0;
        }
        double cm = std::cos(m * phi), sm = std::sin(m * phi);
        double sqrt2 = m > 0 ? std::sqrt(2.0) : 1.0;

        double p_prev = 0.0, p_curr = pmm;
        for (int l = m; l <= L; ++l) {
            if (l > m) {
                double p_next;
                if (l == m + 1) {
                    p_next = ct * (2.0 * m + 1.0) * p_curr;
                } else {
                    p_next = ((2.0 * l - 1.0) * ct * p_curr - (l + m - 1.0) * p_prev) /
                             (l - m);
                }
                p_prev = p_curr;
                p_curr = p_next;
            }
            double base = sqrt2 * sh_norm(l, m) * p_curr;
            int k0 = l * (l + 1);
            out[k0 + m] = base * cm;
            if (m > 0) out[k0 - m] = base * sm;
        }
    }
}

std::vector<double> eval_sh_basis(const Vec3 &d, int degree) {
    std::vector<double> out(num_coeffs(degree));
    eval_sh_basis(d, degree, out.data());
    return out;
}

SHCoeffs project_image(const Image3 &img, int degree) {
    const int H = img.height, W = img.width;
    if (W != 2 * H)
        throw std::invalid_argument("project_image: equirectangular grid requires W = 2H");
    SolidAngleMap w = solid_angle_weights(H, W);
    const int K = num_coeffs(degree);
    SHCoeffs out(degree);
    std::vector<double> basis(K);
    for (int r = 0; r < H; ++r) {
        double dw = w.at(r);
        for (int c = 0; c < W; ++c) {
            eval_sh_basis(pixel_to_direction(r, c, H, W), degree, basis.data());
            for (int ch = 0; ch < 3; ++ch) {
                double v = static_cast<double>(img.at(r, c, ch)) * dw;
                double *acc = out.c.data() + ch;
                for (int k = 0; k < K; ++k) acc[k * 3] += v * basis[k];
            }
        }
    }
    return out;
}

SHCoeffs project(const EnvMap &e, int degree) {
    validate_envmap(e, "project");
    return project_image(e, degree);
}

Image3 reconstruct(const SHCoeffs &c, int height, int width) {
    if (width != 2 * height)
        throw std::invalid_argument("reconstruct: equirectangular grid requires W = 2H");
    const int K = num_coeffs(c.degree);
    if (c.c.size() != static_cast<std::size_t>(K) * 3)
        throw std::invalid_argument("reconstruct: coefficient length does not match degree");
    Image3 out(height, width);
    std::vector<double> basis(K);
    for (int r = 0; r < height; ++r) {
        for (int col = 0; col < width; ++col) {
            eval_sh_basis(pixel_to_direction(r, col, height, width), c.degree, basis.data());
            for (int ch = 0; ch < 3; ++ch) {
                double v = 0;
                const double *cc = c.c.data() + ch;
                for (int k = 0; k < K; ++k) v += cc[k * 3] * basis[k];
                out.at(r, col, ch) = static_cast<float>(v);
            }
        }
    }
    return out;
}

EnvMap reconstruct_clamped(const SHCoeffs &c, int height, int width) {
    Image3 img = reconstruct(c, height, width);
    for (float &v : img.data)
        if (v < 0.0f) v = 0.0f;
    return img;
}

SHCoeffs windowed_lowpass(const SHCoeffs &c) {
    SHCoeffs out = c;
    for (int l = 1; l <= c.degree; ++l) {
        double x = kPi * l / (2.0 * (c.degree + 1));
        double w = std::sin(x) / x;
        for (int m = -l; m <= l; ++m)
            for (int ch = 0; ch < 3; ++ch) out.at(l * (l + 1) + m, ch) *= w;
    }
    return out;
}

void write_sh(const SHCoeffs &c, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sh: cannot open " + path);
    out << "SH " << c.degree << " 3\n";
    char buf[64];
    for (int k = 0; k < num_coeffs(c.degree); ++k)
        for (int ch = 0; ch < 3; ++ch) {
            std::snprintf(buf, sizeof buf, "%.17g\n", c.at(k, ch));
            out << buf;
        }
    if (!out) throw std::runtime_error("write_sh: write failed for " + path);
}

SHCoeffs read_sh(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("read_sh: cannot open " + path, 0);
    std::string tag;
    int degree = -1, channels = 0;
    if (!(in >> tag >> degree >> channels) || tag != "SH")
        throw FormatError("read_sh: bad header in " + path, 0);
    if (degree < 0 || channels != 3)
        throw FormatError("read_sh: unsupported degree/channels in " + path, 3);
    SHCoeffs c(degree);
    for (std::size_t i = 0; i < c.c.size(); ++i)
        if (!(in >> c.c[i])) {
            in.clear();
            auto pos = in.tellg();
            throw FormatError("read_sh: truncated at coefficient " + std::to_string(i),
                              pos < 0 ? 0 : static_cast<std::size_t>(pos));
        }
    return c;
}

}  // namespace lumen
