#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/nn/tensor.hpp"

namespace lumen::nn {

// LPCK container: magic "LPCK", u32 version = 1, u32 tensor count, u8 flags
// (bit 0 = optimizer section present). Per tensor: u16 name length, UTF-8
// name, u8 dtype (0 = f32, 1 = f64), u8 rank, u32 dims, little-endian
// payload. An optimizer section repeats the framing after a u32 count.

struct RawTensor {
    std::string name;
    int dtype = 0;  // 0 = f32, 1 = f64
    std::vector<int> shape;
    std::vector<unsigned char> payload;

    std::size_t count() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
};

struct Checkpoint {
    std::vector<RawTensor> tensors;
    std::vector<RawTensor> optimizer;
    bool has_optimizer = false;
};

void write_checkpoint(const Checkpoint &ck, const std::string &path);
Checkpoint read_checkpoint(const std::string &path);

// ---- typed payload helpers ------------------------------------------------

template <typename T>
constexpr int dtype_of() {
    return sizeof(T) == 4 ? 0 : 1;
}

template <typename T>
RawTensor pack_tensor(const std::string &name, const Tensor<T> &t) {
    RawTensor r;
    r.name = name;
    r.dtype = dtype_of<T>();
    r.shape = t.shape;
    r.payload.resize(t.size() * sizeof(T));
    std::memcpy(r.payload.data(), t.data.data(), r.payload.size());
    return r;
}

template <typename T>
void unpack_tensor(const RawTensor &r, Tensor<T> &out) {
    if (r.dtype != dtype_of<T>())
        throw ConfigError("checkpoint tensor '" + r.name + "' has dtype " +
                          std::to_string(r.dtype) + ", expected " +
                          std::to_string(dtype_of<T>()));
    if (r.shape != out.shape)
        throw ConfigError("checkpoint tensor '" + r.name + "' shape mismatch");
    std::memcpy(out.data.data(), r.payload.data(), r.payload.size());
}

// Plain vector packed as a rank-1 tensor (metadata, optimizer moments).
RawTensor pack_doubles(const std::string &name, const std::vector<double> &v);
std::vector<double> unpack_doubles(const RawTensor &r);

}  // namespace lumen::nn
