// Adam with decoupled weight decay over a flat parameter vector.
#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "regibox/core.hpp"

namespace regibox {

struct AdamWConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <std::floating_point Real>
class AdamW {
public:
    AdamW(std::size_t n_params, AdamWConfig config) : config_(config), m_(n_params, 0.0), v_(n_params, 0.0) {}

    // One step: p <- p - lr*wd*p, then p <- p - lr * m_hat / (sqrt(v_hat) + eps).
    void step(std::span<Real> params, std::span<const Real> grad) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            fail(ErrorKind::numeric, "optimizer parameter count mismatch");
        ++t_;
        const double b1 = config_.beta1;
        const double b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        const double lr = config_.learning_rate;
        const double decay = 1.0 - lr * config_.weight_decay;
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double g = grad[k];
            m_[k] = b1 * m_[k] + (1.0 - b1) * g;
            v_[k] = b2 * v_[k] + (1.0 - b2) * g * g;
            const double m_hat = m_[k] / c1;
            const double v_hat = v_[k] / c2;
            double p = static_cast<double>(params[k]) * decay;
            p -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
            params[k] = static_cast<Real>(p);
        }
    }

    [[nodiscard]] std::size_t steps() const noexcept { return t_; }

private:
    AdamWConfig config_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

}  // namespace regibox
