#pragma once

#include <memory>
#include <vector>

#include "lumen/nn/layers.hpp"
#include "lumen/rng.hpp"

namespace lumen::nn {

// A flat sequence of layers; composite layers manage their own internals.
template <typename T>
class Network {
public:
    Network() = default;
    Network(Network &&) = default;
    Network &operator=(Network &&) = default;

    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    Tensor<T> forward(const Tensor<T> &x, Mode mode) {
        Tensor<T> t = x;
        for (auto &l : layers_) t = l->forward(t, mode);
        return t;
    }

    Tensor<T> backward(const Tensor<T> &gy) {
        Tensor<T> g = gy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    std::vector<ParamSlot<T>> params() {
        std::vector<ParamSlot<T>> out;
        for (auto &l : layers_) l->collect_params(out);
        return out;
    }

    std::vector<NamedTensor<T>> buffers() {
        std::vector<NamedTensor<T>> out;
        for (auto &l : layers_) l->collect_buffers(out);
        return out;
    }

    void zero_grads() {
        for (auto &p : params()) p.grad->fill(T(0));
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto &p : params()) n += p.value->size();
        return n;
    }

    std::size_t size() const { return layers_.size(); }
    Layer<T> *layer(std::size_t i) { return layers_[i].get(); }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// He-uniform over [-sqrt(6/fan_in), +sqrt(6/fan_in)] for weight tensors
// (rank >= 2, fan_in = size / out_channels); rank-1 tensors keep their
// constructed values (zero bias, unit gamma). Each tensor draws from its own
// name-keyed stream, so initialization is order-independent.
template <typename T>
void init_params(Network<T> &net, std::uint64_t seed) {
    for (auto &p : net.params()) {
        if (p.value->rank() < 2) continue;
        std::size_t fan_in = p.value->size() / static_cast<std::size_t>(p.value->dim(0));
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        Rng rng(mix_seed(seed, fnv1a64(p.name)));
        for (auto &v : p.value->data) v = static_cast<T>(rng.uniform(-limit, limit));
    }
}

// FNV-1a over every parameter and buffer payload; freeze-assertion hash.
template <typename T>
std::uint64_t state_hash(Network<T> &net) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto &p : net.params())
        h = fnv1a64(p.value->data.data(), p.value->size() * sizeof(T), h);
    for (auto &b : net.buffers())
        h = fnv1a64(b.tensor->data.data(), b.tensor->size() * sizeof(T), h);
    return h;
}

}  // namespace lumen::nn
