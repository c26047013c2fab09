#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lumen {

inline constexpr const char *kVersion = "0.1.0";

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Error taxonomy. Argument violations use std::invalid_argument directly;
// everything else gets a dedicated type so callers can discriminate.

// Malformed file contents; `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string &msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Recognized container but unsupported flavor (e.g. grayscale PFM).
class UnsupportedFormat : public FormatError {
public:
    using FormatError::FormatError;
};

// Exposure normalization impossible (90th percentile is zero).
class DegenerateExposure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested allocation exceeds the configured budget.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong order (e.g. backward before forward).
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient encountered during optimization.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Linear system is numerically singular and no regularization was requested.
class IllConditioned : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dataset rows reference missing or mismatched artifacts.
class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible configuration (e.g. latent sizes of paired checkpoints).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra. Double precision; float enters only at
// image/tensor storage boundaries.

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double &operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3 &o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return {x / n, y / n, z / n};
    }
};

inline Vec3 operator*(double s, const Vec3 &v) { return v * s; }

// Row-major 3x3 matrix.
struct Mat3 {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 identity() { return {}; }

    // Right-handed rotation about +z by `a` radians.
    static Mat3 rot_z(double a) {
        double c = std::cos(a), s = std::sin(a);
        Mat3 r;
        r.m[0][0] = c; r.m[0][1] = -s; r.m[0][2] = 0;
        r.m[1][0] = s; r.m[1][1] = c;  r.m[1][2] = 0;
        r.m[2][0] = 0; r.m[2][1] = 0;  r.m[2][2] = 1;
        return r;
    }

    // Right-handed rotation about +y by `a` radians.
    static Mat3 rot_y(double a) {
        double c = std::cos(a), s = std::sin(a);
        Mat3 r;
        r.m[0][0] = c;  r.m[0][1] = 0; r.m[0][2] = s;
        r.m[1][0] = 0;  r.m[1][1] = 1; r.m[1][2] = 0;
        r.m[2][0] = -s; r.m[2][1] = 0; r.m[2][2] = c;
        return r;
    }

    Vec3 operator*(const Vec3 &v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3 &o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
                r.m[i][j] = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    // True when R^T R = I and det = 1, both within `tol`.
    bool is_rotation(double tol = 1e-6) const {
        Mat3 g = transposed() * (*this);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double want = i == j ? 1.0 : 0.0;
                if (std::abs(g.m[i][j] - want) > tol) return false;
            }
        return std::abs(det() - 1.0) <= tol;
    }
};

// ---------------------------------------------------------------------------
// FNV-1a, used for content hashes in run manifests and freeze assertions.

inline std::uint64_t fnv1a64(const void *data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string &s) {
    return fnv1a64(s.data(), s.size());
}

// ---------------------------------------------------------------------------
// Static-partition parallel loop. Each worker owns a contiguous index block,
// so output placement is schedule-independent. n_threads <= 1 runs inline.

template <typename F>
void parallel_for(std::int64_t begin, std::int64_t end, int n_threads, F &&body) {
    std::int64_t n = end - begin;
    if (n <= 0) return;
    if (n_threads <= 1 || n == 1) {
        for (std::int64_t i = begin; i < end; ++i) body(i);
        return;
    }
    int workers = static_cast<int>(std::min<std::int64_t>(n_threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = begin + w * chunk;
        std::int64_t hi = std::min<std::int64_t>(lo + chunk, end);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::int64_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto &t : pool) t.join();
}

}  // namespace lumen
