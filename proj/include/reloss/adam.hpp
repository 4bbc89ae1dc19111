#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "reloss/tensor.hpp"

namespace reloss {

struct AdamConfig {
    double learning_rate = 0.01;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// Adam with decoupled weight decay:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   w <- w - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * w
/// where m_hat, v_hat are the bias-corrected moments and the decay term uses
/// the weights from before the step.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    void step(std::span<Tensor<float>* const> params, std::span<const Tensor<float>> grads);

    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace reloss
