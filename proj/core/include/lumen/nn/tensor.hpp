#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lumen::nn {

// Dense row-major tensor, rank 0..4. Rank-4 shape order is NCHW.
// T is float for training, double for gradient checking.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
        for (int d : shape)
            if (d < 1) throw std::invalid_argument("Tensor: dimensions must be positive");
        if (shape.size() > 4) throw std::invalid_argument("Tensor: rank exceeds 4");
        data.assign(count(), T(0));
    }

    std::size_t count() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
    std::size_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    T &operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }

    // NCHW element access.
    T &at4(int n, int c, int h, int w) {
        return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    T at4(int n, int c, int h, int w) const {
        return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape[i]);
        return s + "]";
    }
};

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> *tensor;
};

// Trainable parameter with its gradient accumulator.
template <typename T>
struct ParamSlot {
    std::string name;
    Tensor<T> *value;
    Tensor<T> *grad;
};

}  // namespace lumen::nn
