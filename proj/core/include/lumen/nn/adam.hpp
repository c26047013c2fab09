#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "lumen/common.hpp"
#include "lumen/nn/tensor.hpp"

namespace lumen::nn {

// Adam with bias correction. Moment buffers are keyed by parameter name so
// checkpoints can carry them.
template <typename T>
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(const std::vector<ParamSlot<T>> &params) {
        ++t_;
        double c1 = 1.0 - std::pow(b1_, t_);
        double c2 = 1.0 - std::pow(b2_, t_);
        for (const auto &p : params) {
            State &st = state_[p.name];
            if (st.m.size() != p.value->size()) {
                st.m.assign(p.value->size(), T(0));
                st.v.assign(p.value->size(), T(0));
            }
            for (std::size_t i = 0; i < p.value->size(); ++i) {
                double g = p.grad->data[i];
                if (!std::isfinite(g))
                    throw TrainingDiverged("adam_step: non-finite gradient in " + p.name);
                double m = b1_ * st.m[i] + (1.0 - b1_) * g;
                double v = b2_ * st.v[i] + (1.0 - b2_) * g * g;
                st.m[i] = static_cast<T>(m);
                st.v[i] = static_cast<T>(v);
                p.value->data[i] -=
                    static_cast<T>(lr_ * (m / c1) / (std::sqrt(v / c2) + eps_));
            }
        }
    }

    std::int64_t steps() const { return t_; }
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

    struct State {
        std::vector<T> m, v;
    };
    // Exposed for checkpoint serialization.
    std::map<std::string, State> &state() { return state_; }
    void set_steps(std::int64_t t) { t_ = t; }

private:
    double lr_, b1_, b2_, eps_;
    std::int64_t t_ = 0;
    std::map<std::string, State> state_;
};

}  // namespace lumen::nn
