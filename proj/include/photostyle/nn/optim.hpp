#pragma once

#include <vector>

#include "photostyle/nn/layers.hpp"

namespace photostyle {

// SGD with classical momentum: v <- mu*v + g; theta <- theta - lr*v.
// mu = 0 is plain SGD.
class SgdOptimizer {
public:
    SgdOptimizer(std::vector<ParamTensor*> params, double lr, double momentum = 0.0)
        : params_(std::move(params)), lr_(lr), momentum_(momentum) {
        if (!(lr >= 0.0)) throw ValidationError("sgd: learning rate must be >= 0");
        if (momentum < 0.0 || momentum >= 1.0)
            throw ValidationError("sgd: momentum must be in [0, 1)");
        velocity_.reserve(params_.size());
        for (const auto* p : params_) velocity_.emplace_back(p->value.shape());
    }

    void step() {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& v = velocity_[i];
            auto& p = *params_[i];
            for (std::size_t j = 0; j < v.size(); ++j) {
                v[j] = momentum_ * v[j] + p.grad[j];
                p.value[j] -= lr_ * v[j];
            }
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    double learning_rate() const { return lr_; }

private:
    std::vector<ParamTensor*> params_;
    double lr_;
    double momentum_;
    std::vector<Tensor> velocity_;
};

}  // namespace photostyle
