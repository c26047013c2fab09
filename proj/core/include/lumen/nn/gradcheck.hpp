#pragma once

#include <functional>
#include <string>

#include "lumen/nn/network.hpp"

namespace lumen::nn {

// Scalar loss of a prediction; when `grad` is non-null it must be filled
// with dL/dpred (same shape as pred).
using LossFn = std::function<double(const Tensor<double> &pred, Tensor<double> *grad)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0, numeric = 0.0;
};

// Central finite differences (64-bit) over every parameter element against
// the backpropagated gradient. Train-mode forwards throughout; relative
// error |a - n| / max(|a| + |n|, 1e-3). The denominator floor matters: a
// bias feeding a BatchNorm has an exactly-zero gradient (mean subtraction
// cancels constant shifts), so both sides are pure roundoff there and the
// floor turns the comparison into a 1e-7 absolute tolerance at the usual
// 1e-4 threshold — far above FD noise, far below any real defect.
inline GradCheckResult grad_check(Network<double> &net, const Tensor<double> &input,
                                  const LossFn &loss, double h = 1e-5) {
    auto eval = [&]() {
        Tensor<double> pred = net.forward(input, Mode::train);
        return loss(pred, nullptr);
    };

    // Analytic pass.
    Tensor<double> pred = net.forward(input, Mode::train);
    Tensor<double> gpred(pred.shape);
    loss(pred, &gpred);
    net.zero_grads();
    net.backward(gpred);

    auto params = net.params();
    std::vector<Tensor<double>> analytic;
    analytic.reserve(params.size());
    for (auto &p : params) analytic.push_back(*p.grad);

    GradCheckResult res;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<double> *value = params[pi].value;
        for (std::size_t i = 0; i < value->size(); ++i) {
            double saved = value->data[i];
            value->data[i] = saved + h;
            double lp = eval();
            value->data[i] = saved - h;
            double lm = eval();
            value->data[i] = saved;
            double numeric = (lp - lm) / (2.0 * h);
            double a = analytic[pi].data[i];
            double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-3);
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = params[pi].name;
                res.worst_index = i;
                res.analytic = a;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

// Same comparison for the gradient with respect to the input tensor.
inline GradCheckResult grad_check_input(Network<double> &net, Tensor<double> input,
                                        const LossFn &loss, double h = 1e-5) {
    Tensor<double> pred = net.forward(input, Mode::train);
    Tensor<double> gpred(pred.shape);
    loss(pred, &gpred);
    net.zero_grads();
    Tensor<double> ginput = net.backward(gpred);

    GradCheckResult res;
    for (std::size_t i = 0; i < input.size(); ++i) {
        double saved = input.data[i];
        input.data[i] = saved + h;
        double lp = loss(net.forward(input, Mode::train), nullptr);
        input.data[i] = saved - h;
        double lm = loss(net.forward(input, Mode::train), nullptr);
        input.data[i] = saved;
        double numeric = (lp - lm) / (2.0 * h);
        double a = ginput.data[i];
        double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-3);
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_param = "input";
            res.worst_index = i;
            res.analytic = a;
            res.numeric = numeric;
        }
    }
    return res;
}

}  // namespace lumen::nn
