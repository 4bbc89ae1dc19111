#include "reloss/adam.hpp"

#include <cmath>

#include "reloss/error.hpp"

namespace reloss {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (weight_decay < 0.0) throw Error("weight decay must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw Error("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw Error("Adam epsilon must be positive");
}

void Adam::step(std::span<Tensor<float>* const> params, std::span<const Tensor<float>> grads) {
    if (params.size() != grads.size()) throw ShapeError("Adam: parameter/gradient count mismatch");
    if (m_.empty()) {
        for (const Tensor<float>* p : params) {
            m_.emplace_back(p->numel(), 0.0);
            v_.emplace_back(p->numel(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ShapeError("Adam: parameter set changed between steps");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<float>& w = *params[k];
        const Tensor<float>& g = grads[k];
        if (w.shape() != g.shape() || m_[k].size() != w.numel()) {
            throw ShapeError("Adam: gradient shape " + to_string(g.shape()) + " does not match " +
                             to_string(w.shape()));
        }
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.numel(); ++i) {
            const double gi = g[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double wi = w[i];
            const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
            w[i] = static_cast<float>(wi - cfg_.learning_rate * update - cfg_.learning_rate * cfg_.weight_decay * wi);
        }
    }
}

}  // namespace reloss
